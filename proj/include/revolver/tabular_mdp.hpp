#pragma once

#include <cstdint>
#include <vector>

#include "revolver/rng.hpp"

namespace revolver {

// Finite MDP whose transition tensor interpolates linearly between two
// endpoints: T(beta) = (1-beta) T_S + beta T_T. Rewards are shared.
struct TabularMdpFamily {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> t_source;  // [s][a][s'] flattened
    std::vector<double> t_target;
    std::vector<double> reward;  // [s][a]
    double gamma = 0.9;

    size_t t_index(int s, int a, int s2) const {
        return (static_cast<size_t>(s) * n_actions + a) * n_states + s2;
    }
    size_t r_index(int s, int a) const {
        return static_cast<size_t>(s) * n_actions + a;
    }

    std::vector<double> transition(double beta) const;
    void validate() const;

    static TabularMdpFamily random(int n_states, int n_actions, double gamma, Rng& rng);
};

struct ViResult {
    std::vector<double> values;
    std::vector<int> policy;  // greedy, ties to the lowest action index
    int iterations = 0;
};

ViResult value_iteration(const TabularMdpFamily& fam, double beta, double tol);

// Exact V^pi by solving (I - gamma P_pi) V = R_pi with Gaussian elimination.
std::vector<double> policy_evaluation(const TabularMdpFamily& fam, double beta,
                                      const std::vector<int>& policy);

// All deterministic policies as action digits; count = n_actions^n_states.
long policy_space_size(const TabularMdpFamily& fam);
std::vector<int> decode_policy(const TabularMdpFamily& fam, long index);

}  // namespace revolver
