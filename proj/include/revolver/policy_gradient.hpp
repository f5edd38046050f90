#pragma once

#include <vector>

#include "revolver/env_sim.hpp"
#include "revolver/mlp.hpp"

namespace revolver {

struct PgConfig {
    std::vector<int> hidden{32, 32};
    double actor_lr = 1e-4;
    double baseline_lr = 1e-3;
    double gamma = 0.99;
    double sigma = 0.1;  // fixed Gaussian exploration std
    bool normalize_advantages = true;
};

// Likelihood-ratio policy gradient with a learned value baseline. The policy
// is a Gaussian with tanh-squashed mean and fixed sigma.
struct PgAgent {
    PgConfig cfg;
    MlpNet actor;     // tanh output: mean action
    MlpNet baseline;  // linear scalar: V(s)
    Adam opt_actor, opt_baseline;

    static PgAgent make(int obs_dim, int act_dim, const PgConfig& cfg, Rng& rng);

    std::vector<double> act(const std::vector<double>& obs) const;
    std::vector<double> act_stochastic(const std::vector<double>& obs, Rng& rng) const;

    struct UpdateStats {
        double mean_return = 0.0;
        double baseline_loss = 0.0;
    };
    UpdateStats update(const std::vector<std::vector<Transition>>& trajectories);
};

// Sum over steps of w_t * log N(a_t; mean(s_t), sigma^2 I): the surrogate whose
// analytic gradient the updater follows. Exposed so a finite-difference probe
// can perturb actor parameters and re-evaluate it.
double pg_surrogate(const MlpNet& actor, double sigma,
                    const std::vector<Transition>& steps,
                    const std::vector<double>& weights);

MlpGrads pg_surrogate_grad(const MlpNet& actor, double sigma,
                           const std::vector<Transition>& steps,
                           const std::vector<double>& weights);

// Discounted reward-to-go for each step of one episode.
std::vector<double> discounted_returns(const std::vector<Transition>& episode,
                                       double gamma);

}  // namespace revolver
