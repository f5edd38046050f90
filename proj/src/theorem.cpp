#include "revolver/theorem.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "revolver/parallel.hpp"

namespace revolver {

double alpha_prime(double alpha, double delta, double h) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("alpha out of [0,1]");
    if (delta < 0.0) throw std::invalid_argument("delta must be non-negative");
    if (h < 0.0) throw std::invalid_argument("h must be non-negative");
    if (h < 1e-8)
        return alpha + 0.5 * delta + h * delta * delta / 8.0;
    double rad = 1.0 + h * (2.0 * alpha + delta) +
                 h * h * (alpha * alpha + alpha * delta + 0.5 * delta * delta);
    assert(rad >= 0.0);
    return (std::sqrt(rad) - 1.0) / h;
}

ShapedObjectiveResult shaped_mixture_optimum(const TabularMdpFamily& fam, double alpha,
                                             double delta, double h,
                                             int quadrature_nodes) {
    fam.validate();
    if (!(alpha >= 0.0 && alpha <= 1.0 && alpha + delta <= 1.0 + 1e-12))
        throw std::invalid_argument("[alpha, alpha+delta] must lie inside [0,1]");
    if (delta < 0.0) throw std::invalid_argument("delta must be non-negative");
    long n_policies = policy_space_size(fam);
    if (n_policies > 10000) throw std::runtime_error("enumeration too large");

    std::vector<double> nodes, weights;
    if (delta == 0.0) {
        nodes = {alpha};
        weights = {1.0};
    } else {
        if (quadrature_nodes < 3)
            throw std::invalid_argument("quadrature needs at least 3 nodes");
        if (quadrature_nodes % 2 == 0)
            throw std::invalid_argument("composite Simpson needs an odd node count");
        double hstep = delta / (quadrature_nodes - 1);
        for (int i = 0; i < quadrature_nodes; ++i) {
            nodes.push_back(alpha + i * hstep);
            double w = (i == 0 || i == quadrature_nodes - 1) ? 1.0
                       : (i % 2 == 1)                        ? 4.0
                                                             : 2.0;
            // Simpson weights scaled so the whole rule already includes the
            // leading 1/delta average.
            weights.push_back(w * hstep / 3.0 / delta);
        }
    }

    ShapedObjectiveResult best;
    best.quadrature_nodes = static_cast<int>(nodes.size());
    bool have = false;
    for (long p = 0; p < n_policies; ++p) {
        std::vector<int> pi = decode_policy(fam, p);
        double obj = 0.0;
        for (size_t i = 0; i < nodes.size(); ++i) {
            std::vector<double> v = policy_evaluation(fam, nodes[i], pi);
            double mean_v = 0.0;
            for (double x : v) mean_v += x;
            mean_v /= fam.n_states;
            obj += weights[i] * (1.0 + h * nodes[i]) * mean_v;
        }
        if (!have || obj > best.objective) {
            have = true;
            best.objective = obj;
            best.best_policy = pi;
        }
    }
    return best;
}

TheoremTrialRow validate_single(const TabularMdpFamily& fam,
                                const ValidationSettings& s, double delta,
                                int trial_index) {
    TheoremTrialRow row;
    row.trial = trial_index;
    row.delta = delta;
    row.alpha_prime = alpha_prime(s.alpha, delta, s.h);

    ShapedObjectiveResult mix =
        shaped_mixture_optimum(fam, s.alpha, delta, s.h, s.quadrature_nodes);

    // pointwise-optimal policy on a fine grid over [0,1]
    std::vector<char> match(s.beta_grid);
    for (int g = 0; g < s.beta_grid; ++g) {
        double beta = static_cast<double>(g) / (s.beta_grid - 1);
        ViResult vi = value_iteration(fam, beta, s.vi_tol);
        match[g] = vi.policy == mix.best_policy ? 1 : 0;
    }

    auto grid_beta = [&](int g) { return static_cast<double>(g) / (s.beta_grid - 1); };
    int nearest = static_cast<int>(std::lround(row.alpha_prime * (s.beta_grid - 1)));
    nearest = std::min(std::max(nearest, 0), s.beta_grid - 1);

    if (match[nearest]) {
        int lo = nearest, hi = nearest;
        while (lo > 0 && match[lo - 1]) --lo;
        while (hi + 1 < s.beta_grid && match[hi + 1]) ++hi;
        row.interval_lo = grid_beta(lo);
        row.interval_hi = grid_beta(hi);
        row.contained = true;
    } else {
        // report the longest matching run for context; alpha' is outside it
        int best_lo = -1, best_len = 0, g = 0;
        while (g < s.beta_grid) {
            if (!match[g]) {
                ++g;
                continue;
            }
            int start = g;
            while (g < s.beta_grid && match[g]) ++g;
            if (g - start > best_len) {
                best_len = g - start;
                best_lo = start;
            }
        }
        if (best_lo >= 0) {
            row.interval_lo = grid_beta(best_lo);
            row.interval_hi = grid_beta(best_lo + best_len - 1);
        } else {
            row.interval_lo = -1.0;
            row.interval_hi = -1.0;
        }
        row.contained = false;
    }
    return row;
}

ValidationReport validate_theorem(const ValidationSettings& s,
                                  const std::vector<double>& deltas, uint64_t seed) {
    if (s.trials <= 0) throw std::invalid_argument("trials must be positive");
    for (double d : deltas)
        if (s.alpha + d > 1.0 + 1e-12)
            throw std::invalid_argument("alpha + delta must stay inside [0,1]");

    ValidationReport report;
    report.deltas = deltas;
    report.agreement.assign(deltas.size(), 0.0);

    // Families are derived per trial so every delta sees the same instances.
    std::vector<std::vector<TheoremTrialRow>> rows(s.trials);
    parallel_for(s.trials, [&](int t) {
        Rng rng(derive_seed(seed, RngStreamId::TheoryTrial, static_cast<uint64_t>(t)));
        TabularMdpFamily fam =
            TabularMdpFamily::random(s.n_states, s.n_actions, s.gamma, rng);
        rows[t].reserve(deltas.size());
        for (double d : deltas) rows[t].push_back(validate_single(fam, s, d, t));
    });

    for (int t = 0; t < s.trials; ++t)
        for (size_t di = 0; di < deltas.size(); ++di) {
            report.rows.push_back(rows[t][di]);
            if (rows[t][di].contained) report.agreement[di] += 1.0;
        }
    for (double& a : report.agreement) a /= s.trials;
    return report;
}

}  // namespace revolver
