#pragma once

#include <cstddef>
#include <vector>

#include "revolver/env_sim.hpp"
#include "revolver/rng.hpp"

namespace revolver {

// Ring buffer of beta-tagged transitions. Oldest tuples are evicted at
// capacity; clean() drops everything outside a beta window.
class ReplayBuffer {
public:
    explicit ReplayBuffer(size_t capacity);

    void push(Transition t);
    std::vector<Transition> sample(size_t batch, Rng& rng) const;
    size_t clean(double lo, double hi);

    size_t size() const { return data_.size(); }
    size_t capacity() const { return capacity_; }
    // i = 0 is the oldest stored tuple
    const Transition& at(size_t i) const;

    double min_beta() const;
    double max_beta() const;

private:
    size_t capacity_;
    size_t head_ = 0;  // insertion point once full
    std::vector<Transition> data_;
};

}  // namespace revolver
