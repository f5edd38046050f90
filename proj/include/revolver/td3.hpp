#pragma once

#include <vector>

#include "revolver/env_sim.hpp"
#include "revolver/mlp.hpp"

namespace revolver {

struct Td3Config {
    std::vector<int> hidden{256, 256};
    double actor_lr = 3e-4;
    double critic_lr = 3e-4;
    double gamma = 0.99;
    double tau = 0.005;
    double exploration_noise = 0.1;
    double target_noise = 0.2;
    double noise_clip = 0.5;
    int policy_delay = 2;
    int batch_size = 256;
};

// Twin-critic deterministic-policy-gradient learner with delayed actor and
// Polyak-averaged targets.
struct Td3Agent {
    Td3Config cfg;
    MlpNet actor, critic1, critic2;
    MlpNet target_actor, target_critic1, target_critic2;
    Adam opt_actor, opt_critic1, opt_critic2;
    int64_t update_count = 0;

    static Td3Agent make(int obs_dim, int act_dim, const Td3Config& cfg, Rng& rng);

    std::vector<double> act(const std::vector<double>& obs) const;
    std::vector<double> act_noisy(const std::vector<double>& obs, Rng& rng) const;

    struct Losses {
        double critic = 0.0;
        double actor = 0.0;
        bool actor_updated = false;
    };
    // One gradient step on a sampled batch; the critic loss is the mean squared
    // TD error against the min of the target critics.
    Losses update(const std::vector<Transition>& batch, Rng& rng);

    double q_value(const std::vector<double>& obs, const std::vector<double>& act) const;
};

}  // namespace revolver
