#pragma once

#include "peakrl/core/learners.hpp"
#include "peakrl/core/mdp.hpp"
#include "peakrl/core/transform.hpp"

#include <optional>
#include <string>
#include <vector>

namespace peakrl {

/// Discounted: values = V. Average: values = h with h(s_ref) = 0, gain = v.
struct ValueFunction {
    std::vector<double> values;
    std::optional<double> gain;
    StateId s_ref = 0;
};

enum class Verdict { feasible, infeasible, inconclusive };
const char* to_string(Verdict v) noexcept;

struct FeasibilityVerdict {
    Verdict status = Verdict::inconclusive;
    /// max_a Q*(s, a) (+ v*) per state.
    std::vector<double> witness;
    /// min over states of the witness.
    double margin = 0.0;
    double tolerance = 0.0;
};

using ActionSets = std::vector<std::vector<ActionId>>;

/// A(s) = {a : r^j(s, a) >= 0 for all j}. Sets may be empty.
ActionSets restricted_action_sets(const MdpInstance& inst);

/// States from which some policy can satisfy every peak constraint forever:
/// the largest W such that each s in W has an a in A(s) whose successors all lie in W.
std::vector<char> constraint_safe_states(const MdpInstance& inst);

struct ConstrainedSolution {
    ValueFunction value;
    StochasticPolicy policy;
    std::size_t iterations = 0;
};

/// Value iteration restricted to A(s), discounted. Stops when the sup-norm
/// change drops below tol (1-gamma)/(2 gamma), so |V - V*| <= tol.
/// Throws InfeasibleError when some state cannot keep the constraints forever.
ConstrainedSolution constrained_value_iteration(const MdpInstance& inst, double tol);

struct TransformedSolution {
    QTable q;
    ValueFunction value;
    std::size_t iterations = 0;
};

/// Q* of the clipped unconstrained discounted problem; V*(s) = max_a Q*(s, a).
TransformedSolution transformed_value_iteration(const MdpInstance& inst, const ClipBound& bound,
                                                double tol);

struct RviOptions {
    /// Normalization state; defaults to the declared recurrent state, else 0.
    std::optional<StateId> s_ref;
    /// Self-loop mixing weight of the aperiodicity transform; 1 is plain RVI.
    double damping = 0.5;
    std::size_t max_iterations = 2'000'000;
};

/// Relative value iteration on the clipped average-reward problem (clip at -c).
/// Returns Q*, h* and v* with Q*(s,a) + v* = R(s,a) + sum P h*, h*(s_ref) = 0.
/// Throws NumericError with the span trace when the iteration cap is hit.
TransformedSolution transformed_relative_value_iteration(const MdpInstance& inst, double tol,
                                                         const RviOptions& options = {});

/// The fixed point RVI Q-learning converges to for functional f: Q* + (v* - f(Q*)) e.
QTable rvi_fixed_point(const QTable& qstar, double v_star, const RviFunctional& f);

struct BruteForceResult {
    std::vector<ActionId> policy;
    /// Discounted: V of the best policy per state. Average: empty.
    std::vector<double> values;
    /// Discounted: mean of values. Average: gain.
    double value = 0.0;
    std::uint64_t policies_evaluated = 0;
};

/// Enumerates every deterministic policy inside A(s), evaluates it exactly and keeps the best.
/// Throws CapabilityError past the enumeration guard and InfeasibleError when no
/// feasible policy exists.
BruteForceResult brute_force_policy_search(const MdpInstance& inst, Mode mode);

/// Exact discounted value of a stationary policy on reward table r: (I - gamma P_pi)^{-1} r_pi.
std::vector<double> evaluate_discounted(const MdpInstance& inst, const StochasticPolicy& policy,
                                        const RewardTable& r, double gamma);

/// Stationary distribution of the chain induced by policy. Throws NumericError when
/// it is not unique.
std::vector<double> stationary_distribution(const MdpInstance& inst, const StochasticPolicy& policy);

/// Long-run average reward of policy on table r.
double evaluate_average(const MdpInstance& inst, const StochasticPolicy& policy, const RewardTable& r);

/// Sign test on min_s max_a (Q*(s, a) + v*).
FeasibilityVerdict feasibility_check(const QTable& qstar, std::optional<double> v_star, double tol);

/// Default feasibility tolerance 1e-6 * c.
inline double default_feasibility_tolerance(const MdpInstance& inst) { return 1e-6 * inst.bound_c(); }

struct Counterexample {
    std::string kind;
    StateId state = 0;
    ActionId action = 0;
    double value = 0.0;
    std::string detail;
};

struct AuditReport {
    bool passed = false;
    Mode mode = Mode::discounted;
    double tolerance = 0.0;
    /// Constant added to the reward before solving (0 if rewards were already positive).
    double reward_shift = 0.0;
    StochasticPolicy greedy;
    std::vector<char> reachable;
    bool support_feasible = true;
    /// Sup-norm (discounted) or absolute (average) gap between the greedy policy's
    /// exact raw-reward value and the brute-force constrained optimum.
    double policy_value_gap = 0.0;
    /// Same gap for the transformed optimal value (V* or v*).
    double transformed_value_gap = 0.0;
    double constrained_optimum = 0.0;
    double transformed_optimum = 0.0;
    FeasibilityVerdict verdict;
    std::vector<Counterexample> counterexamples;
};

struct AuditOptions {
    /// Start states for the reachability analysis; empty means every state.
    std::vector<StateId> initial_states;
    double solver_tolerance = 1e-11;
};

/// Checks that the greedy policy of the clipped problem only takes actions in
/// A(s) on reachable states and that its exact raw-reward value matches the
/// brute-force constrained optimum within tol.
AuditReport equivalence_audit(const MdpInstance& inst, Mode mode, double tol,
                              const AuditOptions& options = {});

} // namespace peakrl
