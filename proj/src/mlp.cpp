#include "revolver/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace revolver {

MlpNet MlpNet::make(const std::vector<int>& sizes, bool tanh_output, Rng& rng) {
    if (sizes.size() < 2) throw std::invalid_argument("net needs at least two layers");
    for (int s : sizes)
        if (s <= 0) throw std::invalid_argument("layer sizes must be positive");
    MlpNet net;
    net.sizes = sizes;
    net.tanh_output = tanh_output;
    for (size_t l = 0; l + 1 < sizes.size(); ++l) {
        int in = sizes[l], out = sizes[l + 1];
        double s = 1.0 / std::sqrt(static_cast<double>(in));
        std::vector<double> w(static_cast<size_t>(out) * in);
        for (double& x : w) x = rng.uniform(-s, s);
        net.w.push_back(std::move(w));
        net.b.push_back(std::vector<double>(out, 0.0));
    }
    return net;
}

size_t MlpNet::param_count() const {
    size_t n = 0;
    for (size_t l = 0; l < w.size(); ++l) n += w[l].size() + b[l].size();
    return n;
}

std::vector<double> MlpNet::forward(const std::vector<double>& x) const {
    MlpScratch scratch;
    return forward_cached(*this, x, scratch);
}

std::vector<double> MlpNet::flat_params() const {
    std::vector<double> p;
    p.reserve(param_count());
    for (size_t l = 0; l < w.size(); ++l) {
        p.insert(p.end(), w[l].begin(), w[l].end());
        p.insert(p.end(), b[l].begin(), b[l].end());
    }
    return p;
}

void MlpNet::set_flat_params(const std::vector<double>& p) {
    if (p.size() != param_count())
        throw std::invalid_argument("parameter vector size mismatch");
    size_t k = 0;
    for (size_t l = 0; l < w.size(); ++l) {
        for (double& x : w[l]) x = p[k++];
        for (double& x : b[l]) x = p[k++];
    }
}

void MlpNet::check_finite() const {
    for (size_t l = 0; l < w.size(); ++l) {
        for (double x : w[l])
            if (!std::isfinite(x)) throw std::runtime_error("divergence");
        for (double x : b[l])
            if (!std::isfinite(x)) throw std::runtime_error("divergence");
    }
}

MlpGrads MlpGrads::zeros_like(const MlpNet& net) {
    MlpGrads g;
    for (size_t l = 0; l < net.w.size(); ++l) {
        g.w.push_back(std::vector<double>(net.w[l].size(), 0.0));
        g.b.push_back(std::vector<double>(net.b[l].size(), 0.0));
    }
    return g;
}

void MlpGrads::add_scaled(const MlpGrads& o, double c) {
    for (size_t l = 0; l < w.size(); ++l) {
        for (size_t i = 0; i < w[l].size(); ++i) w[l][i] += c * o.w[l][i];
        for (size_t i = 0; i < b[l].size(); ++i) b[l][i] += c * o.b[l][i];
    }
}

void MlpGrads::scale(double c) {
    for (auto& layer : w)
        for (double& x : layer) x *= c;
    for (auto& layer : b)
        for (double& x : layer) x *= c;
}

std::vector<double> MlpGrads::flat() const {
    std::vector<double> p;
    for (size_t l = 0; l < w.size(); ++l) {
        p.insert(p.end(), w[l].begin(), w[l].end());
        p.insert(p.end(), b[l].begin(), b[l].end());
    }
    return p;
}

const std::vector<double>& forward_cached(const MlpNet& net, const std::vector<double>& x,
                                          MlpScratch& scratch) {
    if (static_cast<int>(x.size()) != net.input_dim())
        throw std::invalid_argument("input dimension mismatch: expected " +
                                    std::to_string(net.input_dim()) + ", got " +
                                    std::to_string(x.size()));
    // resize (not assign) so layer buffers keep their capacity across calls
    scratch.act.resize(net.layer_count() + 1);
    scratch.act[0].assign(x.begin(), x.end());
    for (int l = 0; l < net.layer_count(); ++l) {
        int in = net.sizes[l], out = net.sizes[l + 1];
        const std::vector<double>& a = scratch.act[l];
        std::vector<double>& z = scratch.act[l + 1];
        z.resize(out);
        const double* wrow = net.w[l].data();
        for (int i = 0; i < out; ++i, wrow += in) {
            double s = net.b[l][i];
            for (int j = 0; j < in; ++j) s += wrow[j] * a[j];
            z[i] = s;
        }
        if (l + 1 < net.layer_count())
            for (double& v : z) v = v > 0.0 ? v : 0.0;
        else if (net.tanh_output)
            for (double& v : z) v = std::tanh(v);
    }
    return scratch.act.back();
}

const std::vector<double>& backward(const MlpNet& net, MlpScratch& scratch,
                                    const std::vector<double>& dy, MlpGrads& grads) {
    std::vector<double>& delta = scratch.delta;
    std::vector<double>& prev = scratch.prev;
    delta.assign(dy.begin(), dy.end());
    for (int l = net.layer_count() - 1; l >= 0; --l) {
        int in = net.sizes[l], out = net.sizes[l + 1];
        const std::vector<double>& a_out = scratch.act[l + 1];
        if (l + 1 < net.layer_count())
            for (int i = 0; i < out; ++i) delta[i] *= a_out[i] > 0.0 ? 1.0 : 0.0;
        else if (net.tanh_output)
            for (int i = 0; i < out; ++i) delta[i] *= 1.0 - a_out[i] * a_out[i];
        const std::vector<double>& a_in = scratch.act[l];
        double* gw = grads.w[l].data();
        for (int i = 0; i < out; ++i, gw += in) {
            grads.b[l][i] += delta[i];
            for (int j = 0; j < in; ++j) gw[j] += delta[i] * a_in[j];
        }
        prev.assign(in, 0.0);
        const double* wrow = net.w[l].data();
        for (int i = 0; i < out; ++i, wrow += in)
            for (int j = 0; j < in; ++j) prev[j] += wrow[j] * delta[i];
        delta.swap(prev);
    }
    return delta;
}

const std::vector<double>& forward_batch(const MlpNet& net, const std::vector<double>& x,
                                         size_t n, MlpBatchScratch& scratch) {
    if (x.size() != n * static_cast<size_t>(net.input_dim()))
        throw std::invalid_argument("batch input size mismatch");
    scratch.n = n;
    scratch.act.resize(net.layer_count() + 1);
    scratch.act[0].assign(x.begin(), x.end());
    for (int l = 0; l < net.layer_count(); ++l) {
        size_t in = net.sizes[l], out = net.sizes[l + 1];
        const std::vector<double>& a = scratch.act[l];
        std::vector<double>& z = scratch.act[l + 1];
        z.resize(n * out);
        const double* wbase = net.w[l].data();
        // out in the inner position keeps one weight row live across the batch
        for (size_t o = 0; o < out; ++o) {
            const double* wrow = wbase + o * in;
            double bias = net.b[l][o];
            for (size_t i = 0; i < n; ++i) {
                const double* ai = a.data() + i * in;
                double s = bias;
                for (size_t j = 0; j < in; ++j) s += wrow[j] * ai[j];
                z[i * out + o] = s;
            }
        }
        if (l + 1 < net.layer_count())
            for (double& v : z) v = v > 0.0 ? v : 0.0;
        else if (net.tanh_output)
            for (double& v : z) v = std::tanh(v);
    }
    return scratch.act.back();
}

void backward_batch(const MlpNet& net, MlpBatchScratch& scratch,
                    const std::vector<double>& dy, MlpGrads& grads,
                    std::vector<double>* dx) {
    size_t n = scratch.n;
    if (dy.size() != n * static_cast<size_t>(net.output_dim()))
        throw std::invalid_argument("batch gradient size mismatch");
    std::vector<double>& delta = scratch.delta;
    std::vector<double>& prev = scratch.prev;
    delta.assign(dy.begin(), dy.end());
    for (int l = net.layer_count() - 1; l >= 0; --l) {
        size_t in = net.sizes[l], out = net.sizes[l + 1];
        const std::vector<double>& a_out = scratch.act[l + 1];
        if (l + 1 < net.layer_count())
            for (size_t k = 0; k < n * out; ++k) delta[k] *= a_out[k] > 0.0 ? 1.0 : 0.0;
        else if (net.tanh_output)
            for (size_t k = 0; k < n * out; ++k) delta[k] *= 1.0 - a_out[k] * a_out[k];
        const std::vector<double>& a_in = scratch.act[l];
        for (size_t o = 0; o < out; ++o) {
            double* gw = grads.w[l].data() + o * in;
            double gb = 0.0;
            for (size_t i = 0; i < n; ++i) {
                double d = delta[i * out + o];
                gb += d;
                const double* ai = a_in.data() + i * in;
                for (size_t j = 0; j < in; ++j) gw[j] += d * ai[j];
            }
            grads.b[l][o] += gb;
        }
        bool need_prev = l > 0 || dx != nullptr;
        if (need_prev) {
            prev.assign(n * in, 0.0);
            const double* wbase = net.w[l].data();
            for (size_t i = 0; i < n; ++i) {
                double* pi = prev.data() + i * in;
                const double* di = delta.data() + i * out;
                for (size_t o = 0; o < out; ++o) {
                    const double* wrow = wbase + o * in;
                    double d = di[o];
                    for (size_t j = 0; j < in; ++j) pi[j] += d * wrow[j];
                }
            }
            delta.swap(prev);
        }
    }
    if (dx) dx->assign(delta.begin(), delta.end());
}

void Adam::init(const MlpNet& net) {
    t = 0;
    m = MlpGrads::zeros_like(net);
    v = MlpGrads::zeros_like(net);
}

void Adam::step(MlpNet& net, const MlpGrads& g) {
    t += 1;
    double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t l = 0; l < net.w.size(); ++l) {
        auto update = [&](std::vector<double>& p, std::vector<double>& mo,
                          std::vector<double>& vo, const std::vector<double>& gr) {
            for (size_t i = 0; i < p.size(); ++i) {
                mo[i] = beta1 * mo[i] + (1.0 - beta1) * gr[i];
                vo[i] = beta2 * vo[i] + (1.0 - beta2) * gr[i] * gr[i];
                double mh = mo[i] / c1, vh = vo[i] / c2;
                p[i] -= lr * mh / (std::sqrt(vh) + eps);
            }
        };
        update(net.w[l], m.w[l], v.w[l], g.w[l]);
        update(net.b[l], m.b[l], v.b[l], g.b[l]);
    }
}

std::vector<double> policy_act(const MlpNet& net, const std::vector<double>& s,
                               double noise_scale, Rng& rng, double noise_clip) {
    std::vector<double> a = net.forward(s);
    if (noise_scale != 0.0) {
        for (double& x : a) {
            double n = noise_scale * rng.normal();
            n = std::clamp(n, -noise_clip, noise_clip);
            x += n;
        }
    }
    for (double& x : a) x = std::clamp(x, -1.0, 1.0);
    return a;
}

void polyak_update(MlpNet& target, const MlpNet& live, double tau) {
    for (size_t l = 0; l < live.w.size(); ++l) {
        for (size_t i = 0; i < live.w[l].size(); ++i)
            target.w[l][i] = tau * live.w[l][i] + (1.0 - tau) * target.w[l][i];
        for (size_t i = 0; i < live.b[l].size(); ++i)
            target.b[l][i] = tau * live.b[l][i] + (1.0 - tau) * target.b[l][i];
    }
}

}  // namespace revolver
