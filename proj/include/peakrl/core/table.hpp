#pragma once

#include "peakrl/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace peakrl {

using StateId = std::size_t;
using ActionId = std::size_t;

/// Dense |S| x |A| table of reals, row-major by state.
class StateActionTable {
public:
    StateActionTable() = default;
    StateActionTable(std::size_t n_states, std::size_t n_actions, double fill = 0.0)
        : n_states_(n_states), n_actions_(n_actions), values_(n_states * n_actions, fill) {}

    std::size_t n_states() const noexcept { return n_states_; }
    std::size_t n_actions() const noexcept { return n_actions_; }
    std::size_t size() const noexcept { return values_.size(); }

    double& operator()(StateId s, ActionId a) { return values_[s * n_actions_ + a]; }
    double operator()(StateId s, ActionId a) const { return values_[s * n_actions_ + a]; }

    double& at(StateId s, ActionId a) {
        check(s, a);
        return (*this)(s, a);
    }
    double at(StateId s, ActionId a) const {
        check(s, a);
        return (*this)(s, a);
    }

    std::span<double> row(StateId s) { return {values_.data() + s * n_actions_, n_actions_}; }
    std::span<const double> row(StateId s) const {
        return {values_.data() + s * n_actions_, n_actions_};
    }

    std::span<double> flat() noexcept { return values_; }
    std::span<const double> flat() const noexcept { return values_; }

    double row_max(StateId s) const {
        auto r = row(s);
        return *std::max_element(r.begin(), r.end());
    }

    bool same_shape(const StateActionTable& other) const noexcept {
        return n_states_ == other.n_states_ && n_actions_ == other.n_actions_;
    }

    friend bool operator==(const StateActionTable&, const StateActionTable&) = default;

private:
    void check(StateId s, ActionId a) const {
        if (s >= n_states_ || a >= n_actions_)
            throw IndexError("state-action index (" + std::to_string(s) + "," + std::to_string(a) +
                             ") out of range");
    }

    std::size_t n_states_ = 0;
    std::size_t n_actions_ = 0;
    std::vector<double> values_;
};

/// Action-value estimates of a learner or an oracle.
using QTable = StateActionTable;
/// Per-step reward table, e.g. the clipped transform materialized by the oracle.
using RewardTable = StateActionTable;

/// Sup norm of the entrywise difference.
inline double sup_distance(const StateActionTable& x, const StateActionTable& y) {
    if (!x.same_shape(y)) throw ArgumentError("sup_distance: table shapes differ");
    double d = 0.0;
    auto fx = x.flat();
    auto fy = y.flat();
    for (std::size_t i = 0; i < fx.size(); ++i) d = std::max(d, std::abs(fx[i] - fy[i]));
    return d;
}

} // namespace peakrl
