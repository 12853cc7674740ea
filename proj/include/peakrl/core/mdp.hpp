#pragma once

#include "peakrl/core/rng.hpp"
#include "peakrl/core/table.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace peakrl {

enum class Mode { discounted, average };

const char* to_string(Mode mode) noexcept;
Mode parse_mode(const std::string& text);

/// Absolute tolerance on kernel row sums.
inline constexpr double kKernelTolerance = 1e-9;
/// Enumeration guard for policy-space checks: n_actions^n_states must not exceed it.
inline constexpr double kPolicyEnumerationLimit = 1e6;

/// Plain description of a finite MDP with peak constraints. Turned into an
/// immutable MdpInstance by MdpInstance::create, which enforces every invariant.
struct MdpData {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    /// kernel[s][a][s_next], flattened row-major.
    std::vector<double> kernel;
    /// reward[s][a], flattened.
    std::vector<double> reward;
    /// constraints[j][s][a], one flattened table per constraint.
    std::vector<std::vector<double>> constraints;
    std::optional<double> gamma;
    double bound_c = 1.0;
    std::optional<StateId> recurrent_state;
    /// Constant already added to the reward (see shift_reward); 0 for raw instances.
    double reward_shift = 0.0;
};

/// Finite constrained MDP (S, A, P, r, r^1..r^J, gamma, c). Immutable once built.
class MdpInstance {
public:
    /// Validates and builds. Throws ValidationError naming the first violation.
    static MdpInstance create(MdpData data);

    std::size_t n_states() const noexcept { return d_.n_states; }
    std::size_t n_actions() const noexcept { return d_.n_actions; }
    std::size_t n_constraints() const noexcept { return d_.constraints.size(); }
    std::optional<double> gamma() const noexcept { return d_.gamma; }
    double bound_c() const noexcept { return d_.bound_c; }
    std::optional<StateId> recurrent_state() const noexcept { return d_.recurrent_state; }
    double reward_shift() const noexcept { return d_.reward_shift; }

    double transition(StateId s, ActionId a, StateId next) const {
        return d_.kernel[(s * d_.n_actions + a) * d_.n_states + next];
    }
    std::span<const double> kernel_row(StateId s, ActionId a) const {
        return {d_.kernel.data() + (s * d_.n_actions + a) * d_.n_states, d_.n_states};
    }
    double reward(StateId s, ActionId a) const { return d_.reward[s * d_.n_actions + a]; }
    double constraint(std::size_t j, StateId s, ActionId a) const {
        return d_.constraints[j][s * d_.n_actions + a];
    }

    /// Writes r^1..r^J(s, a) into out (size n_constraints()).
    void constraint_samples(StateId s, ActionId a, std::span<double> out) const;

    RewardTable reward_table() const;
    const MdpData& data() const noexcept { return d_; }

    void check_indices(StateId s, ActionId a) const;

private:
    explicit MdpInstance(MdpData d) : d_(std::move(d)) {}
    MdpData d_;
};

/// Row-stochastic |S| x |A| matrix of action probabilities.
class StochasticPolicy {
public:
    StochasticPolicy() = default;
    explicit StochasticPolicy(StateActionTable probs);

    /// Point-mass policy choosing actions[s] in state s.
    static StochasticPolicy deterministic(std::span<const ActionId> actions, std::size_t n_actions);

    const StateActionTable& probs() const noexcept { return probs_; }
    double prob(StateId s, ActionId a) const { return probs_(s, a); }
    std::size_t n_states() const noexcept { return probs_.n_states(); }
    std::size_t n_actions() const noexcept { return probs_.n_actions(); }

    /// Actions with positive probability in state s.
    std::vector<ActionId> support(StateId s) const;

private:
    StateActionTable probs_;
};

/// N(t, s, a) and t.
class VisitCounter {
public:
    VisitCounter() = default;
    VisitCounter(std::size_t n_states, std::size_t n_actions)
        : n_actions_(n_actions), counts_(n_states * n_actions, 0) {}

    /// Records one visit and returns the updated count of (s, a).
    std::uint64_t record(StateId s, ActionId a) {
        ++total_;
        return ++counts_[s * n_actions_ + a];
    }
    std::uint64_t count(StateId s, ActionId a) const { return counts_[s * n_actions_ + a]; }
    std::uint64_t total_steps() const noexcept { return total_; }
    std::size_t entries() const noexcept { return counts_.size(); }
    std::span<const std::uint64_t> counts() const noexcept { return counts_; }

private:
    std::size_t n_actions_ = 0;
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

struct SimulationState {
    StateId current_state = 0;
    std::uint64_t rng_seed = 0;
    std::uint64_t step = 0;
};

/// Draws s+ from kernel[s][a][.]. Throws IndexError on bad indices.
StateId sample_transition(const MdpInstance& inst, StateId s, ActionId a, Rng& rng);

/// r' = r + c + epsilon, c' = 2c + epsilon; the added constant accumulates in reward_shift().
MdpInstance shift_reward(const MdpInstance& inst, double epsilon);

/// Default positivity shift epsilon = 0.1 * c.
double default_shift_epsilon(const MdpInstance& inst);

/// Returns inst unchanged when every reward is already positive, else the shifted instance.
MdpInstance ensure_positive_reward(const MdpInstance& inst);

struct PolicyCheckReport {
    bool passed = true;
    std::uint64_t policies_checked = 0;
    /// First deterministic policy that breaks the property.
    std::optional<std::vector<ActionId>> violating_policy;
    std::string detail;
};

/// Every deterministic stationary policy induces an irreducible chain.
PolicyCheckReport check_unichain(const MdpInstance& inst);

/// s_star is reachable from every state under every deterministic stationary policy.
PolicyCheckReport check_recurrent_state(const MdpInstance& inst, StateId s_star);

/// Throws CapabilityError when n_actions^n_states exceeds the enumeration guard.
void require_enumerable(const MdpInstance& inst, const char* what);

/// Calls visit(policy) for every deterministic policy over the given per-state
/// action sets, in lexicographic order. Stops early when visit returns false.
template <class Visit>
void for_each_policy(const std::vector<std::vector<ActionId>>& choices, Visit&& visit) {
    const std::size_t n = choices.size();
    for (const auto& c : choices)
        if (c.empty()) return;
    std::vector<std::size_t> idx(n, 0);
    std::vector<ActionId> policy(n);
    while (true) {
        for (std::size_t s = 0; s < n; ++s) policy[s] = choices[s][idx[s]];
        if (!visit(static_cast<const std::vector<ActionId>&>(policy))) return;
        std::size_t s = 0;
        while (s < n && ++idx[s] == choices[s].size()) idx[s++] = 0;
        if (s == n) return;
    }
}

} // namespace peakrl
