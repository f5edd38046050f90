#include "revolver/policy_gradient.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace revolver {

namespace {

std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
    std::vector<int> s;
    s.push_back(in);
    s.insert(s.end(), hidden.begin(), hidden.end());
    s.push_back(out);
    return s;
}

constexpr double kLog2Pi = 1.8378770664093454836;

}  // namespace

PgAgent PgAgent::make(int obs_dim, int act_dim, const PgConfig& cfg, Rng& rng) {
    if (obs_dim <= 0 || act_dim <= 0)
        throw std::invalid_argument("observation/action dimensions must be positive");
    if (cfg.sigma <= 0.0) throw std::invalid_argument("sigma must be positive");
    PgAgent a;
    a.cfg = cfg;
    a.actor = MlpNet::make(layer_sizes(obs_dim, cfg.hidden, act_dim), true, rng);
    a.baseline = MlpNet::make(layer_sizes(obs_dim, cfg.hidden, 1), false, rng);
    a.opt_actor.lr = cfg.actor_lr;
    a.opt_baseline.lr = cfg.baseline_lr;
    a.opt_actor.init(a.actor);
    a.opt_baseline.init(a.baseline);
    return a;
}

std::vector<double> PgAgent::act(const std::vector<double>& obs) const {
    std::vector<double> a = actor.forward(obs);
    for (double& x : a) x = std::clamp(x, -1.0, 1.0);
    return a;
}

std::vector<double> PgAgent::act_stochastic(const std::vector<double>& obs,
                                            Rng& rng) const {
    std::vector<double> a = actor.forward(obs);
    for (double& x : a) x = std::clamp(x + cfg.sigma * rng.normal(), -1.0, 1.0);
    return a;
}

std::vector<double> discounted_returns(const std::vector<Transition>& episode,
                                       double gamma) {
    std::vector<double> g(episode.size());
    double acc = 0.0;
    for (size_t i = episode.size(); i-- > 0;) {
        acc = episode[i].reward + gamma * acc;
        g[i] = acc;
    }
    return g;
}

double pg_surrogate(const MlpNet& actor, double sigma,
                    const std::vector<Transition>& steps,
                    const std::vector<double>& weights) {
    if (steps.size() != weights.size())
        throw std::invalid_argument("weights must match step count");
    int d = actor.output_dim();
    double inv_var = 1.0 / (sigma * sigma);
    double total = 0.0;
    for (size_t i = 0; i < steps.size(); ++i) {
        std::vector<double> mu = actor.forward(steps[i].state);
        double logp = -0.5 * d * (kLog2Pi + 2.0 * std::log(sigma));
        for (int k = 0; k < d; ++k) {
            double e = steps[i].action[k] - mu[k];
            logp -= 0.5 * e * e * inv_var;
        }
        total += weights[i] * logp;
    }
    return total;
}

MlpGrads pg_surrogate_grad(const MlpNet& actor, double sigma,
                           const std::vector<Transition>& steps,
                           const std::vector<double>& weights) {
    if (steps.size() != weights.size())
        throw std::invalid_argument("weights must match step count");
    int d = actor.output_dim();
    double inv_var = 1.0 / (sigma * sigma);
    MlpGrads g = MlpGrads::zeros_like(actor);
    for (size_t i = 0; i < steps.size(); ++i) {
        MlpScratch scr;
        std::vector<double> mu = forward_cached(actor, steps[i].state, scr);
        std::vector<double> dmu(d);
        for (int k = 0; k < d; ++k)
            dmu[k] = weights[i] * (steps[i].action[k] - mu[k]) * inv_var;
        backward(actor, scr, dmu, g);
    }
    return g;
}

PgAgent::UpdateStats PgAgent::update(
    const std::vector<std::vector<Transition>>& trajectories) {
    if (trajectories.empty()) throw std::invalid_argument("no trajectories");

    std::vector<Transition> steps;
    std::vector<double> returns;
    UpdateStats stats;
    for (const auto& ep : trajectories) {
        std::vector<double> g = discounted_returns(ep, cfg.gamma);
        if (!ep.empty()) stats.mean_return += g.front();
        steps.insert(steps.end(), ep.begin(), ep.end());
        returns.insert(returns.end(), g.begin(), g.end());
    }
    stats.mean_return /= static_cast<double>(trajectories.size());
    if (steps.empty()) return stats;

    // advantage = return - baseline, then the baseline regresses to returns
    std::vector<double> adv(steps.size());
    MlpGrads gb = MlpGrads::zeros_like(baseline);
    double inv_n = 1.0 / static_cast<double>(steps.size());
    for (size_t i = 0; i < steps.size(); ++i) {
        MlpScratch scr;
        double v = forward_cached(baseline, steps[i].state, scr)[0];
        adv[i] = returns[i] - v;
        stats.baseline_loss += adv[i] * adv[i] * inv_n;
        backward(baseline, scr, {-2.0 * adv[i] * inv_n}, gb);
    }
    if (!std::isfinite(stats.baseline_loss)) throw std::runtime_error("divergence");
    opt_baseline.step(baseline, gb);

    if (cfg.normalize_advantages) {
        double mean = 0.0;
        for (double a : adv) mean += a;
        mean *= inv_n;
        double var = 0.0;
        for (double a : adv) var += (a - mean) * (a - mean);
        double sd = std::sqrt(var * inv_n);
        if (sd > 1e-8)
            for (double& a : adv) a = (a - mean) / sd;
    }

    bool all_zero = std::all_of(adv.begin(), adv.end(),
                                [](double a) { return a == 0.0; });
    if (!all_zero) {
        MlpGrads ga = pg_surrogate_grad(actor, cfg.sigma, steps, adv);
        ga.scale(-inv_n);  // Adam minimizes; ascend the surrogate
        for (double v : ga.flat())
            if (!std::isfinite(v)) throw std::runtime_error("divergence");
        opt_actor.step(actor, ga);
    }
    return stats;
}

}  // namespace revolver
