#pragma once

#include "peakrl/core/environment.hpp"
#include "peakrl/core/mdp.hpp"
#include "peakrl/core/transform.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace peakrl {

/// alpha = 1/(N+1)^omega where N counts visits to (s, a) including the current one,
/// so alpha < 1 always. Robbins-Monro for omega in (0.5, 1].
struct DiscountedSchedule {
    double omega = 0.7;

    double alpha(std::uint64_t visits) const;
    void validate() const;
};

enum class ScheduleFamily { inv_k, inv_k_log_k, inv_k_pow, custom };

/// beta(k) with k = N(t, s, a) >= 1 counting the current visit.
/// inv_k_log_k evaluates 1/((k+1) log(k+1)).
struct AverageSchedule {
    ScheduleFamily family = ScheduleFamily::inv_k;
    double omega = 1.0;                             // inv_k_pow only
    std::function<double(std::uint64_t)> custom_fn{}; // custom only

    double beta(std::uint64_t k) const;
    std::string name() const;
};

/// Parses "1/k", "1/(k log k)", "1/k^w" (e.g. "1/k^0.5") or "1/sqrt(k)".
/// Anything else is a CapabilityError.
AverageSchedule parse_average_schedule(const std::string& text);

/// epsilon(k) = max(floor, start * decay_steps / (decay_steps + k)); a
/// decay_steps of 0 gives the constant epsilon = floor.
struct ExplorationPolicy {
    double epsilon_floor = 0.05;
    double epsilon_start = 1.0;
    std::uint64_t decay_steps = 0;

    double epsilon(std::uint64_t step) const;
    /// allow_zero_floor admits the decay-to-zero configuration, which gives up
    /// the often-updates property.
    void validate(bool allow_zero_floor) const;
};

/// Normalizing functional f: R^{|S|x|A|} -> R for RVI Q-learning.
struct RviFunctional {
    enum class Kind { reference_entry, mean_of_table, max_of_table };
    Kind kind = Kind::reference_entry;
    StateId s_ref = 0;
    ActionId a_ref = 0;

    double operator()(const QTable& q) const;
    std::string name() const;
};

RviFunctional parse_functional(const std::string& text);

/// q[s][a] <- (1-alpha) q[s][a] + alpha (r + gamma max_a' q[s_next][a']).
void q_update_discounted(QTable& q, StateId s, ActionId a, double clipped_r, StateId s_next,
                         double gamma, double alpha);

/// q[s][a] <- q[s][a] + beta (r + max_a' q[s_next][a'] - f(q) - q[s][a]).
void rvi_update_average(QTable& q, StateId s, ActionId a, double clipped_r, StateId s_next,
                        double beta, const RviFunctional& f);

/// Uniform over actions within tie_tolerance of the row maximum.
StochasticPolicy greedy_policy(const QTable& q, double tie_tolerance = 1e-9);

struct FunctionalReport {
    bool passed = true;
    /// 1 Lipschitz, 2 homogeneity, 3 shift equivariance; 0 when passed.
    int failed_condition = 0;
    std::string counterexample;
    double lipschitz_estimate = 0.0;
    /// Whether f(-Q) = -f(Q) also held, i.e. homogeneity for negative scalars.
    /// Informational: max_of_table is only positively homogeneous.
    bool odd = true;
};

/// Randomized check of the three conditions of the class Phi on
/// n_states x n_actions tables. Deterministic probes run before the random trials.
/// Homogeneity is tested for scalars c >= 0.
FunctionalReport validate_functional(const std::function<double(const QTable&)>& f,
                                     std::size_t n_states, std::size_t n_actions, int trials,
                                     std::uint64_t seed = 1, double lipschitz_bound = 1e3);
FunctionalReport validate_functional(const RviFunctional& f, std::size_t n_states,
                                     std::size_t n_actions, int trials, std::uint64_t seed = 1);

struct ScheduleReport {
    bool passed = true;
    int failed_condition = 0;
    std::string reason;
    // numeric spot checks over the horizon
    double max_ratio_condition1 = 0.0;
    double sum_beta = 0.0;
    double sum_beta_squared = 0.0;
    /// max over the (x, y) grid of |1 - partial-sum ratio| at t = horizon
    double max_gap_condition3 = 0.0;
};

/// Analytic verdict for the named families plus numeric spot checks.
/// Throws CapabilityError for custom schedules.
ScheduleReport validate_schedule(const AverageSchedule& schedule, std::uint64_t horizon);

struct LearnerConfig {
    Mode mode = Mode::discounted;
    /// Overrides the instance gamma; must be absent in average mode.
    std::optional<double> gamma;
    DiscountedSchedule discounted;
    AverageSchedule average;
    ExplorationPolicy exploration;
    double q_init = 0.0;
    RviFunctional f;
    std::uint64_t steps = 0;
    std::uint64_t seed = 0;
    StateId initial_state = 0;
    double tie_tolerance = 1e-9;
    /// Skip the schedule/exploration assumption checks (e.g. decay-to-zero runs).
    bool waive_assumptions = false;
};

struct LearnerFootprint {
    std::size_t q_entries = 0;
    std::size_t counter_entries = 0;
    /// Bytes of persistent state: Q table, visit counts and fixed-size scalars.
    std::size_t bytes = 0;
};

/// Online tabular learner for the clipped problem. Persistent state is one
/// Q table, one visit counter, the current state, the step and the RNG.
class Learner {
public:
    Learner(std::size_t n_states, std::size_t n_actions, ClipBound bound, double gamma,
            LearnerConfig config);

    /// Epsilon-greedy choice in the current state.
    ActionId act();

    /// Consumes one transition. Returns the clipped reward used in the update.
    double observe(ActionId a, double reward_sample, std::span<const double> constraint_samples,
                   StateId next_state);

    const QTable& q() const noexcept { return q_; }
    const VisitCounter& visits() const noexcept { return visits_; }
    StateId state() const noexcept { return state_; }
    std::uint64_t step() const noexcept { return step_; }
    const ClipBound& bound() const noexcept { return bound_; }
    const LearnerConfig& config() const noexcept { return config_; }
    Rng& rng() noexcept { return rng_; }

    LearnerFootprint footprint() const noexcept;

private:
    QTable q_;
    VisitCounter visits_;
    Rng rng_;
    StateId state_;
    std::uint64_t step_ = 0;
    ClipBound bound_;
    double gamma_;
    LearnerConfig config_;
};

struct ExperimentRecord {
    std::uint64_t step = 0;
    StateId state = 0;
    ActionId action = 0;
    double raw_reward = 0.0;
    double clipped_reward = 0.0;
    std::vector<bool> violations;
    std::uint64_t cumulative_violations = 0;
    std::optional<double> sup_error;
    double avg_reward = 0.0;
    std::optional<double> f_q;
};

/// Every step up to 1000, then at steps ceil(1.05^i).
class LogCadence {
public:
    bool should_log(std::uint64_t step);

private:
    double next_geometric_ = 1.0;
    bool primed_ = false;
};

struct LearningOptions {
    /// Q* the learner should converge to; enables the sup_error column.
    std::optional<QTable> reference_q;
    std::function<void(const ExperimentRecord&)> on_record;
    /// Always record the final step even when the cadence skips it.
    bool record_final = true;
};

struct LearningResult {
    QTable q;
    VisitCounter visits;
    std::uint64_t violation_steps = 0;
    std::vector<std::uint64_t> violations_per_constraint;
    double avg_reward = 0.0;
    std::optional<double> final_sup_error;
    std::optional<double> final_f;
    LearnerFootprint footprint;
};

/// Gamma the learner will use: config override, else instance gamma.
/// Throws ConfigError on mode mismatch.
double resolve_gamma(const LearnerConfig& config, std::optional<double> instance_gamma);

/// Runs the online loop for config.steps steps against env.
LearningResult run_learning(const Environment& env, const ClipBound& bound,
                            std::optional<double> instance_gamma, const LearnerConfig& config,
                            const LearningOptions& options = {});

/// Convenience overload sampling directly from an instance.
LearningResult run_learning(const MdpInstance& inst, const LearnerConfig& config,
                            const LearningOptions& options = {});

} // namespace peakrl
