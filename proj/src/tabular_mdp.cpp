#include "revolver/tabular_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace revolver {

std::vector<double> TabularMdpFamily::transition(double beta) const {
    if (!(beta >= 0.0 && beta <= 1.0))
        throw std::invalid_argument("beta out of [0,1]");
    std::vector<double> t(t_source.size());
    for (size_t i = 0; i < t.size(); ++i)
        t[i] = (1.0 - beta) * t_source[i] + beta * t_target[i];
    return t;
}

void TabularMdpFamily::validate() const {
    if (n_states <= 0 || n_actions <= 0)
        throw std::invalid_argument("state/action counts must be positive");
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw std::invalid_argument("gamma must be in [0,1)");
    size_t tn = static_cast<size_t>(n_states) * n_actions * n_states;
    if (t_source.size() != tn || t_target.size() != tn)
        throw std::invalid_argument("transition tensor size mismatch");
    if (reward.size() != static_cast<size_t>(n_states) * n_actions)
        throw std::invalid_argument("reward table size mismatch");
    for (double r : reward)
        if (!std::isfinite(r)) throw std::invalid_argument("non-finite reward entry");
    auto check_rows = [&](const std::vector<double>& t, const char* which) {
        for (int s = 0; s < n_states; ++s)
            for (int a = 0; a < n_actions; ++a) {
                double sum = 0;
                for (int s2 = 0; s2 < n_states; ++s2) {
                    double p = t[t_index(s, a, s2)];
                    if (p < -1e-12)
                        throw std::invalid_argument(std::string(which) +
                                                    " has a negative probability");
                    sum += p;
                }
                if (std::abs(sum - 1.0) > 1e-9)
                    throw std::invalid_argument(std::string(which) +
                                                " row does not sum to 1");
            }
    };
    check_rows(t_source, "source tensor");
    check_rows(t_target, "target tensor");
}

TabularMdpFamily TabularMdpFamily::random(int n_states, int n_actions, double gamma,
                                          Rng& rng) {
    TabularMdpFamily f;
    f.n_states = n_states;
    f.n_actions = n_actions;
    f.gamma = gamma;
    size_t tn = static_cast<size_t>(n_states) * n_actions * n_states;
    f.t_source.resize(tn);
    f.t_target.resize(tn);
    f.reward.resize(static_cast<size_t>(n_states) * n_actions);
    auto fill_rows = [&](std::vector<double>& t) {
        for (int s = 0; s < n_states; ++s)
            for (int a = 0; a < n_actions; ++a) {
                double sum = 0;
                for (int s2 = 0; s2 < n_states; ++s2) {
                    double x = -std::log(1.0 - rng.uniform01());  // Exp(1) => Dirichlet(1)
                    t[f.t_index(s, a, s2)] = x;
                    sum += x;
                }
                for (int s2 = 0; s2 < n_states; ++s2) t[f.t_index(s, a, s2)] /= sum;
            }
    };
    fill_rows(f.t_source);
    fill_rows(f.t_target);
    for (double& r : f.reward) r = rng.uniform01();
    return f;
}

ViResult value_iteration(const TabularMdpFamily& fam, double beta, double tol) {
    if (tol <= 0.0) throw std::invalid_argument("tol must be positive");
    std::vector<double> t = fam.transition(beta);
    int n = fam.n_states, na = fam.n_actions;

    ViResult out;
    out.values.assign(n, 0.0);
    std::vector<double> next(n);
    const int max_iter = 1000000;
    for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
        double resid = 0.0;
        for (int s = 0; s < n; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < na; ++a) {
                double q = fam.reward[fam.r_index(s, a)];
                for (int s2 = 0; s2 < n; ++s2)
                    q += fam.gamma * t[fam.t_index(s, a, s2)] * out.values[s2];
                best = std::max(best, q);
            }
            next[s] = best;
            resid = std::max(resid, std::abs(next[s] - out.values[s]));
        }
        out.values = next;
        if (resid < tol) break;
    }

    out.policy.assign(n, 0);
    for (int s = 0; s < n; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < na; ++a) {
            double q = fam.reward[fam.r_index(s, a)];
            for (int s2 = 0; s2 < n; ++s2)
                q += fam.gamma * t[fam.t_index(s, a, s2)] * out.values[s2];
            if (q > best) {  // strict: ties keep the lowest action index
                best = q;
                out.policy[s] = a;
            }
        }
    }
    return out;
}

std::vector<double> policy_evaluation(const TabularMdpFamily& fam, double beta,
                                      const std::vector<int>& policy) {
    int n = fam.n_states;
    if (static_cast<int>(policy.size()) != n)
        throw std::invalid_argument("policy size mismatch");
    std::vector<double> t = fam.transition(beta);

    // rows of (I - gamma P_pi) | R_pi
    std::vector<std::vector<double>> m(n, std::vector<double>(n + 1, 0.0));
    for (int s = 0; s < n; ++s) {
        int a = policy[s];
        if (a < 0 || a >= fam.n_actions) throw std::invalid_argument("bad action in policy");
        for (int s2 = 0; s2 < n; ++s2)
            m[s][s2] = (s == s2 ? 1.0 : 0.0) - fam.gamma * t[fam.t_index(s, a, s2)];
        m[s][n] = fam.reward[fam.r_index(s, a)];
    }

    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        std::swap(m[col], m[pivot]);
        double p = m[col][col];
        if (std::abs(p) < 1e-14)
            throw std::runtime_error("singular system in policy evaluation");
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            double f = m[r][col] / p;
            if (f == 0.0) continue;
            for (int c = col; c <= n; ++c) m[r][c] -= f * m[col][c];
        }
    }
    std::vector<double> v(n);
    for (int s = 0; s < n; ++s) v[s] = m[s][n] / m[s][s];
    return v;
}

long policy_space_size(const TabularMdpFamily& fam) {
    long count = 1;
    for (int s = 0; s < fam.n_states; ++s) {
        count *= fam.n_actions;
        if (count > 100000000L) throw std::runtime_error("enumeration too large");
    }
    return count;
}

std::vector<int> decode_policy(const TabularMdpFamily& fam, long index) {
    std::vector<int> pi(fam.n_states);
    for (int s = 0; s < fam.n_states; ++s) {
        pi[s] = static_cast<int>(index % fam.n_actions);
        index /= fam.n_actions;
    }
    return pi;
}

}  // namespace revolver
