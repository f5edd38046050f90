#pragma once

#include <cstdint>
#include <vector>

#include "revolver/tabular_mdp.hpp"

namespace revolver {

// Closed-form evolution parameter at which the shaped-mixture-optimal policy
// is predicted to be pointwise optimal:
//   alpha' = (sqrt(1 + h(2a+d) + h^2(a^2 + ad + d^2/2)) - 1) / h,
// with the series limit a + d/2 + h d^2/8 below h = 1e-8.
double alpha_prime(double alpha, double delta, double h);

struct ShapedObjectiveResult {
    std::vector<int> best_policy;
    double objective = 0.0;
    int quadrature_nodes = 0;
};

// Exhaustive search over deterministic policies for the maximizer of
//   (1/d) * integral over [alpha, alpha+delta] of (1+h*beta) * mean_s V^pi_beta(s),
// integrated by composite Simpson. delta = 0 degenerates to one robot.
ShapedObjectiveResult shaped_mixture_optimum(const TabularMdpFamily& fam, double alpha,
                                             double delta, double h,
                                             int quadrature_nodes);

struct TheoremTrialRow {
    int trial = 0;
    double delta = 0.0;
    double interval_lo = 0.0;
    double interval_hi = 0.0;
    double alpha_prime = 0.0;
    bool contained = false;
};

struct ValidationSettings {
    double alpha = 0.3;
    double h = 1.0;
    int trials = 200;
    int n_states = 4;
    int n_actions = 2;
    double gamma = 0.9;
    int quadrature_nodes = 21;
    int beta_grid = 201;  // grid over [0,1] for the pointwise-optimal policy
    double vi_tol = 1e-10;
};

struct ValidationReport {
    std::vector<TheoremTrialRow> rows;
    std::vector<double> deltas;
    std::vector<double> agreement;  // per delta, same order
};

// For each trial (one random family shared across deltas) finds the beta
// interval where the pointwise-optimal policy equals the shaped-mixture
// optimum, and checks whether alpha_prime falls inside it.
ValidationReport validate_theorem(const ValidationSettings& settings,
                                  const std::vector<double>& deltas, uint64_t seed);

// Single-family variant used by tests and the report assembly.
TheoremTrialRow validate_single(const TabularMdpFamily& fam,
                                const ValidationSettings& settings, double delta,
                                int trial_index);

}  // namespace revolver
