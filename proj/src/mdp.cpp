#include "peakrl/core/mdp.hpp"

#include <cmath>
#include <sstream>

namespace peakrl {

namespace {

// Reward bounds tolerate rounding from the positivity shift.
constexpr double kBoundSlack = 1e-12;

std::string sa(StateId s, ActionId a) {
    return "(s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")";
}

std::string policy_text(const std::vector<ActionId>& p) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
    os << ']';
    return os.str();
}

// States reachable from `start` along edges with positive probability under
// `policy`, either forward or along reversed edges.
std::vector<char> reach(const MdpInstance& inst, const std::vector<ActionId>& policy,
                        StateId start, bool reverse) {
    const std::size_t n = inst.n_states();
    std::vector<char> seen(n, 0);
    std::vector<StateId> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
        StateId u = stack.back();
        stack.pop_back();
        for (StateId v = 0; v < n; ++v) {
            if (seen[v]) continue;
            double p = reverse ? inst.transition(v, policy[v], u) : inst.transition(u, policy[u], v);
            if (p > 0.0) {
                seen[v] = 1;
                stack.push_back(v);
            }
        }
    }
    return seen;
}

std::vector<std::vector<ActionId>> all_actions(const MdpInstance& inst) {
    std::vector<ActionId> actions(inst.n_actions());
    for (ActionId a = 0; a < actions.size(); ++a) actions[a] = a;
    return std::vector<std::vector<ActionId>>(inst.n_states(), actions);
}

} // namespace

const char* to_string(Mode mode) noexcept {
    return mode == Mode::discounted ? "discounted" : "average";
}

Mode parse_mode(const std::string& text) {
    if (text == "discounted") return Mode::discounted;
    if (text == "average") return Mode::average;
    throw ArgumentError("unknown mode '" + text + "' (expected discounted or average)");
}

MdpInstance MdpInstance::create(MdpData d) {
    const std::size_t S = d.n_states, A = d.n_actions;
    if (S == 0) throw ValidationError("n_states must be positive");
    if (A == 0) throw ValidationError("n_actions must be positive");
    if (!(d.bound_c > 0.0) || !std::isfinite(d.bound_c))
        throw ValidationError("bound_c must be a positive finite number");
    if (d.gamma && !(*d.gamma > 0.0 && *d.gamma < 1.0))
        throw ValidationError("gamma must lie in (0, 1)");
    if (d.kernel.size() != S * A * S)
        throw ValidationError("kernel must have n_states*n_actions*n_states entries");
    if (d.reward.size() != S * A) throw ValidationError("reward must have n_states*n_actions entries");
    if (d.recurrent_state && *d.recurrent_state >= S)
        throw ValidationError("recurrent_state out of range");

    const double limit = d.bound_c * (1.0 + kBoundSlack);
    for (StateId s = 0; s < S; ++s) {
        for (ActionId a = 0; a < A; ++a) {
            double sum = 0.0;
            for (StateId n = 0; n < S; ++n) {
                double p = d.kernel[(s * A + a) * S + n];
                if (!(p >= 0.0 && p <= 1.0))
                    throw ValidationError("kernel entry " + sa(s, a) + " -> " + std::to_string(n) +
                                          " outside [0, 1]");
                sum += p;
            }
            if (std::abs(sum - 1.0) > kKernelTolerance) {
                std::ostringstream os;
                os.precision(17);
                os << "kernel row " << sa(s, a) << " sums to " << sum;
                throw ValidationError(os.str());
            }
            double r = d.reward[s * A + a];
            if (!std::isfinite(r) || std::abs(r) > limit)
                throw ValidationError("reward " + sa(s, a) + " exceeds bound_c in magnitude");
        }
    }
    for (std::size_t j = 0; j < d.constraints.size(); ++j) {
        const auto& t = d.constraints[j];
        if (t.size() != S * A)
            throw ValidationError("constraint table " + std::to_string(j) +
                                  " must have n_states*n_actions entries");
        for (std::size_t i = 0; i < t.size(); ++i)
            if (!std::isfinite(t[i]) || std::abs(t[i]) > limit)
                throw ValidationError("constraint " + std::to_string(j) + " " + sa(i / A, i % A) +
                                      " exceeds bound_c in magnitude");
    }
    return MdpInstance(std::move(d));
}

void MdpInstance::constraint_samples(StateId s, ActionId a, std::span<double> out) const {
    for (std::size_t j = 0; j < d_.constraints.size(); ++j) out[j] = constraint(j, s, a);
}

RewardTable MdpInstance::reward_table() const {
    RewardTable t(n_states(), n_actions());
    std::copy(d_.reward.begin(), d_.reward.end(), t.flat().begin());
    return t;
}

void MdpInstance::check_indices(StateId s, ActionId a) const {
    if (s >= n_states()) throw IndexError("state " + std::to_string(s) + " out of range");
    if (a >= n_actions()) throw IndexError("action " + std::to_string(a) + " out of range");
}

StochasticPolicy::StochasticPolicy(StateActionTable probs) : probs_(std::move(probs)) {
    for (StateId s = 0; s < probs_.n_states(); ++s) {
        double sum = 0.0;
        for (double p : probs_.row(s)) {
            if (!(p >= 0.0)) throw ValidationError("policy probabilities must be nonnegative");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kKernelTolerance)
            throw ValidationError("policy row " + std::to_string(s) + " does not sum to 1");
    }
}

StochasticPolicy StochasticPolicy::deterministic(std::span<const ActionId> actions,
                                                 std::size_t n_actions) {
    StateActionTable t(actions.size(), n_actions, 0.0);
    for (StateId s = 0; s < actions.size(); ++s) t.at(s, actions[s]) = 1.0;
    return StochasticPolicy(std::move(t));
}

std::vector<ActionId> StochasticPolicy::support(StateId s) const {
    std::vector<ActionId> out;
    for (ActionId a = 0; a < n_actions(); ++a)
        if (probs_(s, a) > 0.0) out.push_back(a);
    return out;
}

StateId sample_transition(const MdpInstance& inst, StateId s, ActionId a, Rng& rng) {
    inst.check_indices(s, a);
    auto row = inst.kernel_row(s, a);
    const double u = rng.uniform();
    double cum = 0.0;
    StateId last = 0;
    for (StateId n = 0; n < row.size(); ++n) {
        if (row[n] <= 0.0) continue;
        cum += row[n];
        last = n;
        if (u < cum) return n;
    }
    // u landed in the rounding gap above the cumulative sum
    return last;
}

MdpInstance shift_reward(const MdpInstance& inst, double epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw ArgumentError("shift epsilon must be positive");
    MdpData d = inst.data();
    const double shift = d.bound_c + epsilon;
    for (double& r : d.reward) r += shift;
    d.bound_c = 2.0 * d.bound_c + epsilon;
    d.reward_shift += shift;
    return MdpInstance::create(std::move(d));
}

double default_shift_epsilon(const MdpInstance& inst) { return 0.1 * inst.bound_c(); }

MdpInstance ensure_positive_reward(const MdpInstance& inst) {
    const auto& r = inst.data().reward;
    if (std::all_of(r.begin(), r.end(), [](double x) { return x > 0.0; })) return inst;
    return shift_reward(inst, default_shift_epsilon(inst));
}

void require_enumerable(const MdpInstance& inst, const char* what) {
    double count = std::pow(static_cast<double>(inst.n_actions()),
                            static_cast<double>(inst.n_states()));
    if (count > kPolicyEnumerationLimit)
        throw CapabilityError(std::string(what) + ": n_actions^n_states = " +
                              std::to_string(count) +
                              " exceeds the enumeration limit 1e6; use a sampling-based spot check");
}

PolicyCheckReport check_unichain(const MdpInstance& inst) {
    require_enumerable(inst, "check_unichain");
    PolicyCheckReport report;
    for_each_policy(all_actions(inst), [&](const std::vector<ActionId>& policy) {
        ++report.policies_checked;
        auto fwd = reach(inst, policy, 0, false);
        auto bwd = reach(inst, policy, 0, true);
        for (StateId s = 0; s < inst.n_states(); ++s) {
            if (!fwd[s] || !bwd[s]) {
                report.passed = false;
                report.violating_policy = policy;
                report.detail = "policy " + policy_text(policy) + " induces a reducible chain: state " +
                                std::to_string(s) +
                                (fwd[s] ? " cannot reach state 0" : " is unreachable from state 0");
                return false;
            }
        }
        return true;
    });
    return report;
}

PolicyCheckReport check_recurrent_state(const MdpInstance& inst, StateId s_star) {
    require_enumerable(inst, "check_recurrent_state");
    if (s_star >= inst.n_states()) throw IndexError("recurrent state out of range");
    PolicyCheckReport report;
    for_each_policy(all_actions(inst), [&](const std::vector<ActionId>& policy) {
        ++report.policies_checked;
        auto bwd = reach(inst, policy, s_star, true);
        for (StateId s = 0; s < inst.n_states(); ++s) {
            if (!bwd[s]) {
                report.passed = false;
                report.violating_policy = policy;
                report.detail = "under policy " + policy_text(policy) + " state " +
                                std::to_string(s_star) + " is unreachable from state " +
                                std::to_string(s);
                return false;
            }
        }
        return true;
    });
    return report;
}

} // namespace peakrl
