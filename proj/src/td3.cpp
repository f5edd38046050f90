#include "revolver/td3.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace revolver {

namespace {

std::vector<double> concat(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> c;
    c.reserve(a.size() + b.size());
    c.insert(c.end(), a.begin(), a.end());
    c.insert(c.end(), b.begin(), b.end());
    return c;
}

std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
    std::vector<int> s;
    s.push_back(in);
    s.insert(s.end(), hidden.begin(), hidden.end());
    s.push_back(out);
    return s;
}

}  // namespace

Td3Agent Td3Agent::make(int obs_dim, int act_dim, const Td3Config& cfg, Rng& rng) {
    if (obs_dim <= 0 || act_dim <= 0)
        throw std::invalid_argument("observation/action dimensions must be positive");
    if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0))
        throw std::invalid_argument("gamma must be in [0,1)");
    Td3Agent a;
    a.cfg = cfg;
    a.actor = MlpNet::make(layer_sizes(obs_dim, cfg.hidden, act_dim), true, rng);
    a.critic1 = MlpNet::make(layer_sizes(obs_dim + act_dim, cfg.hidden, 1), false, rng);
    a.critic2 = MlpNet::make(layer_sizes(obs_dim + act_dim, cfg.hidden, 1), false, rng);
    a.target_actor = a.actor;
    a.target_critic1 = a.critic1;
    a.target_critic2 = a.critic2;
    a.opt_actor.lr = cfg.actor_lr;
    a.opt_critic1.lr = cfg.critic_lr;
    a.opt_critic2.lr = cfg.critic_lr;
    a.opt_actor.init(a.actor);
    a.opt_critic1.init(a.critic1);
    a.opt_critic2.init(a.critic2);
    return a;
}

std::vector<double> Td3Agent::act(const std::vector<double>& obs) const {
    std::vector<double> a = actor.forward(obs);
    for (double& x : a) x = std::clamp(x, -1.0, 1.0);
    return a;
}

std::vector<double> Td3Agent::act_noisy(const std::vector<double>& obs, Rng& rng) const {
    return policy_act(actor, obs, cfg.exploration_noise, rng, cfg.noise_clip);
}

double Td3Agent::q_value(const std::vector<double>& obs,
                         const std::vector<double>& act) const {
    return critic1.forward(concat(obs, act))[0];
}

Td3Agent::Losses Td3Agent::update(const std::vector<Transition>& batch, Rng& rng) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    size_t n = batch.size();
    size_t obs_dim = actor.input_dim(), act_dim = actor.output_dim();

    // Whole-batch matrices; one layer of one net at a time stays cache-hot.
    std::vector<double> xs(n * obs_dim), x2(n * obs_dim), sa(n * (obs_dim + act_dim));
    for (size_t i = 0; i < n; ++i) {
        std::copy(batch[i].state.begin(), batch[i].state.end(), xs.begin() + i * obs_dim);
        std::copy(batch[i].next_state.begin(), batch[i].next_state.end(),
                  x2.begin() + i * obs_dim);
    }
    MlpBatchScratch bs, cs;

    // TD targets from the target nets with smoothed target actions
    std::vector<double> a2 = forward_batch(target_actor, x2, n, bs);
    for (double& x : a2) {
        double noise =
            std::clamp(cfg.target_noise * rng.normal(), -cfg.noise_clip, cfg.noise_clip);
        x = std::clamp(x + noise, -1.0, 1.0);
    }
    auto pack_sa = [&](const std::vector<double>& x, const double* acts) {
        for (size_t i = 0; i < n; ++i) {
            double* row = sa.data() + i * (obs_dim + act_dim);
            std::copy(x.begin() + i * obs_dim, x.begin() + (i + 1) * obs_dim, row);
            std::copy(acts + i * act_dim, acts + (i + 1) * act_dim, row + obs_dim);
        }
    };
    pack_sa(x2, a2.data());
    std::vector<double> targets = forward_batch(target_critic1, sa, n, bs);  // q1
    const std::vector<double>& q2t = forward_batch(target_critic2, sa, n, cs);
    for (size_t i = 0; i < n; ++i) {
        const Transition& t = batch[i];
        targets[i] = t.reward +
                     cfg.gamma * (t.done ? 0.0 : 1.0) * std::min(targets[i], q2t[i]);
    }

    Losses out;
    MlpGrads g1 = MlpGrads::zeros_like(critic1);
    MlpGrads g2 = MlpGrads::zeros_like(critic2);
    double inv_n = 1.0 / static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
        double* row = sa.data() + i * (obs_dim + act_dim);
        std::copy(batch[i].state.begin(), batch[i].state.end(), row);
        std::copy(batch[i].action.begin(), batch[i].action.end(), row + obs_dim);
    }
    std::vector<double> dy(n);
    for (MlpNet* c : {&critic1, &critic2}) {
        const std::vector<double>& q = forward_batch(*c, sa, n, bs);
        for (size_t i = 0; i < n; ++i) {
            double e = q[i] - targets[i];
            out.critic += e * e * inv_n;
            dy[i] = 2.0 * e * inv_n;
        }
        backward_batch(*c, bs, dy, c == &critic1 ? g1 : g2);
    }
    if (!std::isfinite(out.critic)) throw std::runtime_error("divergence");
    opt_critic1.step(critic1, g1);
    opt_critic2.step(critic2, g2);

    update_count += 1;
    if (update_count % cfg.policy_delay == 0) {
        // maximize mean critic1(s, actor(s)): ascend through the critic
        MlpGrads ga = MlpGrads::zeros_like(actor);
        MlpGrads scrap = MlpGrads::zeros_like(critic1);  // sink, never applied
        const std::vector<double>& a = forward_batch(actor, xs, n, bs);
        pack_sa(xs, a.data());
        const std::vector<double>& q = forward_batch(critic1, sa, n, cs);
        double actor_obj = 0.0;
        for (size_t i = 0; i < n; ++i) {
            actor_obj += q[i] * inv_n;
            dy[i] = -inv_n;
        }
        std::vector<double> dsa;
        backward_batch(critic1, cs, dy, scrap, &dsa);
        std::vector<double> da(n * act_dim);
        for (size_t i = 0; i < n; ++i)
            std::copy(dsa.begin() + i * (obs_dim + act_dim) + obs_dim,
                      dsa.begin() + (i + 1) * (obs_dim + act_dim), da.begin() + i * act_dim);
        backward_batch(actor, bs, da, ga);
        out.actor = -actor_obj;
        if (!std::isfinite(out.actor)) throw std::runtime_error("divergence");
        opt_actor.step(actor, ga);
        out.actor_updated = true;

        polyak_update(target_actor, actor, cfg.tau);
        polyak_update(target_critic1, critic1, cfg.tau);
        polyak_update(target_critic2, critic2, cfg.tau);
    }
    return out;
}

}  // namespace revolver
