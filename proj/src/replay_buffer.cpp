#include "revolver/replay_buffer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace revolver {

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
    data_.reserve(std::min<size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
    if (!(t.beta >= 0.0 && t.beta <= 1.0))
        throw std::invalid_argument("transition beta out of [0,1]");
    if (!std::isfinite(t.reward))
        throw std::invalid_argument("transition reward is not finite");
    if (data_.size() < capacity_) {
        data_.push_back(std::move(t));
    } else {
        data_[head_] = std::move(t);
        head_ = (head_ + 1) % capacity_;
    }
}

const Transition& ReplayBuffer::at(size_t i) const {
    if (i >= data_.size()) throw std::out_of_range("replay index out of range");
    if (data_.size() < capacity_) return data_[i];
    return data_[(head_ + i) % capacity_];
}

std::vector<Transition> ReplayBuffer::sample(size_t batch, Rng& rng) const {
    if (batch > data_.size())
        throw std::invalid_argument("insufficient samples: have " +
                                    std::to_string(data_.size()) + ", need " +
                                    std::to_string(batch));
    std::vector<size_t> idx(data_.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<Transition> out;
    out.reserve(batch);
    for (size_t i = 0; i < batch; ++i) {
        size_t j = i + static_cast<size_t>(rng.below(static_cast<uint64_t>(idx.size() - i)));
        std::swap(idx[i], idx[j]);
        out.push_back(data_[idx[i]]);
    }
    return out;
}

size_t ReplayBuffer::clean(double lo, double hi) {
    if (!(lo >= 0.0 && lo <= hi && hi <= 1.0))
        throw std::invalid_argument("clean window must satisfy 0 <= lo <= hi <= 1");
    std::vector<Transition> kept;
    kept.reserve(data_.size());
    for (size_t i = 0; i < data_.size(); ++i) {
        const Transition& t = at(i);
        if (t.beta >= lo && t.beta <= hi) kept.push_back(t);
    }
    size_t removed = data_.size() - kept.size();
    data_ = std::move(kept);
    head_ = 0;
    return removed;
}

double ReplayBuffer::min_beta() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& t : data_) m = std::min(m, t.beta);
    return m;
}

double ReplayBuffer::max_beta() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& t : data_) m = std::max(m, t.beta);
    return m;
}

}  // namespace revolver
