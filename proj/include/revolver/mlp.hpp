#pragma once

#include <cstdint>
#include <vector>

#include "revolver/rng.hpp"

namespace revolver {

// Dense feed-forward net: relu hidden layers, tanh or linear output. Weights
// are row-major (out x in) per layer.
struct MlpNet {
    std::vector<int> sizes;
    bool tanh_output = false;
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;

    static MlpNet make(const std::vector<int>& sizes, bool tanh_output, Rng& rng);

    int input_dim() const { return sizes.front(); }
    int output_dim() const { return sizes.back(); }
    int layer_count() const { return static_cast<int>(sizes.size()) - 1; }
    size_t param_count() const;

    std::vector<double> forward(const std::vector<double>& x) const;

    std::vector<double> flat_params() const;
    void set_flat_params(const std::vector<double>& p);
    void check_finite() const;
};

// Per-layer activations kept from a forward pass so backward can reuse them.
// Reusing one scratch across calls avoids any steady-state allocation.
struct MlpScratch {
    std::vector<std::vector<double>> act;  // act[0] = input, act[L] = output
    std::vector<double> delta, prev;       // backward workspace
};

// Gradient (or any parameter-shaped accumulator) matching an MlpNet.
struct MlpGrads {
    std::vector<std::vector<double>> w, b;

    static MlpGrads zeros_like(const MlpNet& net);
    void add_scaled(const MlpGrads& o, double c);
    void scale(double c);
    std::vector<double> flat() const;
};

// Returns a reference into scratch (valid until the next call with the same
// scratch); copy it if you need it to outlive that.
const std::vector<double>& forward_cached(const MlpNet& net, const std::vector<double>& x,
                                          MlpScratch& scratch);

// Backprop from dL/d(output); accumulates parameter gradients and returns
// dL/d(input), which lets an actor update flow through a critic.  The returned
// reference points into scratch, same lifetime rule as forward_cached.
const std::vector<double>& backward(const MlpNet& net, MlpScratch& scratch,
                                    const std::vector<double>& dy, MlpGrads& grads);

// Minibatch variants.  Activations are row-major n x dim matrices; running a
// whole batch through one layer at a time keeps that layer's weights cache-hot,
// which is what makes the training loop fast on one core.
struct MlpBatchScratch {
    std::vector<std::vector<double>> act;  // act[l]: n x sizes[l]
    std::vector<double> delta, prev;
    size_t n = 0;
};

// x: n x input_dim.  Returns n x output_dim (reference into scratch).
const std::vector<double>& forward_batch(const MlpNet& net, const std::vector<double>& x,
                                         size_t n, MlpBatchScratch& scratch);

// dy: n x output_dim.  Accumulates summed parameter gradients into grads; if
// dx is non-null it receives dL/d(input) as n x input_dim.
void backward_batch(const MlpNet& net, MlpBatchScratch& scratch,
                    const std::vector<double>& dy, MlpGrads& grads,
                    std::vector<double>* dx = nullptr);

struct Adam {
    double lr = 3e-4;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    int64_t t = 0;
    MlpGrads m, v;

    void init(const MlpNet& net);
    void step(MlpNet& net, const MlpGrads& g);
};

// tanh-squashed action with clipped Gaussian exploration noise, clamped to
// [-1,1]. noise_scale 0 gives the deterministic action.
std::vector<double> policy_act(const MlpNet& net, const std::vector<double>& s,
                               double noise_scale, Rng& rng, double noise_clip = 0.5);

void polyak_update(MlpNet& target, const MlpNet& live, double tau);

}  // namespace revolver
