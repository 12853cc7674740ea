#pragma once

#include "peakrl/core/mdp.hpp"

#include <span>

namespace peakrl {

struct Observation {
    double reward = 0.0;
    StateId next_state = 0;
};

/// What a learner interacts with: it sees states, reward samples and
/// constraint samples, never the tables behind them.
class Environment {
public:
    virtual ~Environment() = default;

    virtual std::size_t n_states() const = 0;
    virtual std::size_t n_actions() const = 0;
    virtual std::size_t n_constraints() const = 0;

    /// Executes a in s. Writes the J constraint samples into constraint_out.
    virtual Observation step(StateId s, ActionId a, std::span<double> constraint_out, Rng& rng) const = 0;
};

/// Samples straight from an instance's kernel and deterministic reward tables.
class InstanceEnvironment : public Environment {
public:
    explicit InstanceEnvironment(const MdpInstance& inst) : inst_(inst) {}

    std::size_t n_states() const override { return inst_.n_states(); }
    std::size_t n_actions() const override { return inst_.n_actions(); }
    std::size_t n_constraints() const override { return inst_.n_constraints(); }

    Observation step(StateId s, ActionId a, std::span<double> constraint_out, Rng& rng) const override {
        inst_.check_indices(s, a);
        inst_.constraint_samples(s, a, constraint_out);
        return {inst_.reward(s, a), sample_transition(inst_, s, a, rng)};
    }

    const MdpInstance& instance() const noexcept { return inst_; }

private:
    const MdpInstance& inst_;
};

} // namespace peakrl
