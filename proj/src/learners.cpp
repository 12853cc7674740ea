#include "peakrl/core/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace peakrl {

namespace {

void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) throw NumericError(std::string(what) + " is not finite");
}

bool close(double x, double y) { return std::abs(x - y) <= 1e-9 * (1.0 + std::abs(x) + std::abs(y)); }

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}

QTable random_table(std::size_t S, std::size_t A, double scale, Rng& rng) {
    QTable q(S, A);
    for (double& v : q.flat()) v = scale * (2.0 * rng.uniform() - 1.0);
    return q;
}

} // namespace

// ---------------------------------------------------------------------------
// schedules, exploration, functionals

double DiscountedSchedule::alpha(std::uint64_t visits) const {
    return 1.0 / std::pow(static_cast<double>(visits) + 1.0, omega);
}

void DiscountedSchedule::validate() const {
    if (!(omega > 0.5 && omega <= 1.0))
        throw ConfigError("discounted schedule exponent must lie in (0.5, 1], got " + fmt(omega));
}

double AverageSchedule::beta(std::uint64_t k) const {
    const double x = static_cast<double>(k);
    switch (family) {
    case ScheduleFamily::inv_k: return 1.0 / x;
    case ScheduleFamily::inv_k_log_k: return 1.0 / ((x + 1.0) * std::log(x + 1.0));
    case ScheduleFamily::inv_k_pow: return 1.0 / std::pow(x, omega);
    case ScheduleFamily::custom: return custom_fn(k);
    }
    return 0.0;
}

std::string AverageSchedule::name() const {
    switch (family) {
    case ScheduleFamily::inv_k: return "1/k";
    case ScheduleFamily::inv_k_log_k: return "1/(k log k)";
    case ScheduleFamily::inv_k_pow: return "1/k^" + fmt(omega);
    case ScheduleFamily::custom: return "custom";
    }
    return "?";
}

AverageSchedule parse_average_schedule(const std::string& text) {
    std::string t;
    for (char c : text)
        if (c != ' ') t += c;
    if (t == "1/k" || t == "inv_k") return {ScheduleFamily::inv_k};
    if (t == "1/(klogk)" || t == "1/(k*log(k))" || t == "inv_k_log_k")
        return {ScheduleFamily::inv_k_log_k};
    if (t == "1/sqrt(k)") return {ScheduleFamily::inv_k_pow, 0.5};
    if (t.rfind("1/k^", 0) == 0) {
        try {
            std::size_t used = 0;
            double w = std::stod(t.substr(4), &used);
            if (used == t.size() - 4 && w > 0.0) return {ScheduleFamily::inv_k_pow, w};
        } catch (const std::exception&) {
        }
    }
    throw CapabilityError("unknown learning-rate family '" + text + "'");
}

double ExplorationPolicy::epsilon(std::uint64_t step) const {
    if (decay_steps == 0) return epsilon_floor;
    const double d = static_cast<double>(decay_steps);
    return std::max(epsilon_floor, epsilon_start * d / (d + static_cast<double>(step)));
}

void ExplorationPolicy::validate(bool allow_zero_floor) const {
    if (!(epsilon_floor <= 1.0) || epsilon_floor < 0.0 || (!allow_zero_floor && epsilon_floor == 0.0))
        throw ConfigError("epsilon floor must lie in (0, 1], got " + fmt(epsilon_floor));
    if (decay_steps > 0 && !(epsilon_start >= 0.0 && epsilon_start <= 1.0))
        throw ConfigError("epsilon start must lie in [0, 1]");
}

double RviFunctional::operator()(const QTable& q) const {
    switch (kind) {
    case Kind::reference_entry: return q(s_ref, a_ref);
    case Kind::mean_of_table: {
        auto v = q.flat();
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    }
    case Kind::max_of_table: {
        auto v = q.flat();
        return *std::max_element(v.begin(), v.end());
    }
    }
    return 0.0;
}

std::string RviFunctional::name() const {
    switch (kind) {
    case Kind::reference_entry:
        return "reference_entry(" + std::to_string(s_ref) + "," + std::to_string(a_ref) + ")";
    case Kind::mean_of_table: return "mean";
    case Kind::max_of_table: return "max";
    }
    return "?";
}

RviFunctional parse_functional(const std::string& text) {
    if (text == "mean" || text == "mean_of_table") return {RviFunctional::Kind::mean_of_table};
    if (text == "max" || text == "max_of_table") return {RviFunctional::Kind::max_of_table};
    if (text == "reference_entry" || text == "ref") return {RviFunctional::Kind::reference_entry};
    // reference_entry(s,a) / ref(s,a)
    auto open = text.find('(');
    auto comma = text.find(',');
    auto close_p = text.find(')');
    if (open != std::string::npos && comma != std::string::npos && close_p != std::string::npos) {
        auto head = text.substr(0, open);
        if (head == "reference_entry" || head == "ref") {
            try {
                RviFunctional f{RviFunctional::Kind::reference_entry};
                f.s_ref = std::stoul(text.substr(open + 1, comma - open - 1));
                f.a_ref = std::stoul(text.substr(comma + 1, close_p - comma - 1));
                return f;
            } catch (const std::exception&) {
            }
        }
    }
    throw ConfigError("unknown functional '" + text + "' (expected mean, max or reference_entry(s,a))");
}

// ---------------------------------------------------------------------------
// updates

void q_update_discounted(QTable& q, StateId s, ActionId a, double clipped_r, StateId s_next,
                         double gamma, double alpha) {
    require_finite(clipped_r, "reward");
    require_finite(gamma, "gamma");
    require_finite(alpha, "alpha");
    if (!(alpha >= 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in [0, 1)");
    q.at(s, a);
    if (s_next >= q.n_states()) throw IndexError("next state out of range");
    const double target = clipped_r + gamma * q.row_max(s_next);
    double& entry = q(s, a);
    entry = (1.0 - alpha) * entry + alpha * target;
    require_finite(entry, "updated Q entry");
}

void rvi_update_average(QTable& q, StateId s, ActionId a, double clipped_r, StateId s_next,
                        double beta, const RviFunctional& f) {
    require_finite(clipped_r, "reward");
    require_finite(beta, "beta");
    if (!(beta >= 0.0 && beta <= 1.0)) throw ArgumentError("beta must lie in [0, 1]");
    q.at(s, a);
    if (s_next >= q.n_states()) throw IndexError("next state out of range");
    const double increment = clipped_r + q.row_max(s_next) - f(q) - q(s, a);
    q(s, a) += beta * increment;
    require_finite(q(s, a), "updated Q entry");
}

StochasticPolicy greedy_policy(const QTable& q, double tie_tolerance) {
    StateActionTable probs(q.n_states(), q.n_actions(), 0.0);
    for (StateId s = 0; s < q.n_states(); ++s) {
        const double best = q.row_max(s);
        std::size_t ties = 0;
        for (double v : q.row(s))
            if (v >= best - tie_tolerance) ++ties;
        for (ActionId a = 0; a < q.n_actions(); ++a)
            if (q(s, a) >= best - tie_tolerance) probs(s, a) = 1.0 / static_cast<double>(ties);
    }
    return StochasticPolicy(std::move(probs));
}

// ---------------------------------------------------------------------------
// validators

FunctionalReport validate_functional(const std::function<double(const QTable&)>& f,
                                     std::size_t n_states, std::size_t n_actions, int trials,
                                     std::uint64_t seed, double lipschitz_bound) {
    if (trials < 1) throw ArgumentError("validate_functional needs at least one trial");
    FunctionalReport report;
    Rng rng(seed);

    auto fail = [&](int condition, std::string what) {
        report.passed = false;
        report.failed_condition = condition;
        report.counterexample = std::move(what);
    };

    auto homogeneous = [&](const QTable& q, double c) {
        QTable scaled = q;
        for (double& v : scaled.flat()) v *= c;
        double lhs = f(scaled), rhs = c * f(q);
        if (!close(lhs, rhs))
            fail(2, "f(cQ) = " + fmt(lhs) + " but c f(Q) = " + fmt(rhs) + " for c = " + fmt(c) +
                        ", Q(0,0) = " + fmt(q(0, 0)));
        return report.passed;
    };
    auto shift_equivariant = [&](const QTable& q, double r) {
        QTable shifted = q;
        for (double& v : shifted.flat()) v += r;
        double lhs = f(shifted), rhs = f(q) + r;
        if (!close(lhs, rhs))
            fail(3, "f(Q + r e) = " + fmt(lhs) + " but f(Q) + r = " + fmt(rhs) + " for r = " + fmt(r) +
                        ", Q(0,0) = " + fmt(q(0, 0)));
        return report.passed;
    };

    // Deterministic probe: constant table 2 scaled by 2.
    const QTable twos(n_states, n_actions, 2.0);
    if (!homogeneous(twos, 2.0) || !shift_equivariant(twos, 1.0)) return report;

    for (int t = 0; t < trials; ++t) {
        QTable q = random_table(n_states, n_actions, 10.0, rng);
        double c = 5.0 * rng.uniform();
        double r = 20.0 * rng.uniform() - 10.0;
        if (!homogeneous(q, c) || !shift_equivariant(q, r)) return report;
        QTable negated = q;
        for (double& v : negated.flat()) v = -v;
        if (!close(f(negated), -f(q))) report.odd = false;
    }

    // Lipschitz in the sup norm: perturbation ratios across growing scales.
    double worst = 0.0;
    for (double scale : {1.0, 10.0, 100.0, 1e3, 1e4}) {
        for (int t = 0; t < trials; ++t) {
            QTable q1 = random_table(n_states, n_actions, scale, rng);
            QTable q2 = q1;
            for (double& v : q2.flat()) v += 1e-3 * scale * (2.0 * rng.uniform() - 1.0);
            double dist = sup_distance(q1, q2);
            if (dist == 0.0) continue;
            double ratio = std::abs(f(q1) - f(q2)) / dist;
            if (!std::isfinite(ratio)) ratio = INFINITY;
            worst = std::max(worst, ratio);
        }
    }
    report.lipschitz_estimate = worst;
    if (!(worst <= lipschitz_bound))
        fail(1, "difference quotient " + fmt(worst) + " exceeds the Lipschitz bound " +
                    fmt(lipschitz_bound));
    return report;
}

FunctionalReport validate_functional(const RviFunctional& f, std::size_t n_states,
                                     std::size_t n_actions, int trials, std::uint64_t seed) {
    if (f.kind == RviFunctional::Kind::reference_entry && (f.s_ref >= n_states || f.a_ref >= n_actions))
        throw IndexError("reference entry outside the table");
    return validate_functional([&f](const QTable& q) { return f(q); }, n_states, n_actions, trials,
                               seed);
}

ScheduleReport validate_schedule(const AverageSchedule& schedule, std::uint64_t horizon) {
    if (schedule.family == ScheduleFamily::custom)
        throw CapabilityError("no decision procedure for custom learning-rate schedules");
    if (horizon < 1000) throw ArgumentError("schedule validation horizon must be at least 1000");

    ScheduleReport report;
    switch (schedule.family) {
    case ScheduleFamily::inv_k:
    case ScheduleFamily::inv_k_log_k: break;
    case ScheduleFamily::inv_k_pow: {
        const double w = schedule.omega;
        if (w == 1.0) break;
        report.passed = false;
        if (w <= 0.5) {
            report.failed_condition = 2;
            report.reason = "sum of beta^2 = sum 1/k^" + fmt(2 * w) + " diverges";
        } else if (w > 1.0) {
            report.failed_condition = 2;
            report.reason = "sum of beta = sum 1/k^" + fmt(w) + " converges";
        } else {
            report.failed_condition = 3;
            report.reason = "partial-sum ratio tends to y^" + fmt(1 - w) + ", not 1";
        }
        break;
    }
    case ScheduleFamily::custom: break;
    }

    // Numeric spot checks; prefix sums make condition 3 O(horizon).
    std::vector<double> prefix(horizon + 1, 0.0);
    for (std::uint64_t k = 1; k <= horizon; ++k) {
        const double b = schedule.beta(k);
        prefix[k] = prefix[k - 1] + b;
        report.sum_beta_squared += b * b;
    }
    report.sum_beta = prefix[horizon];

    const double grid[] = {0.1, 0.25, 0.5, 0.75, 0.9};
    for (double x : grid) {
        for (std::uint64_t k = 2; k <= horizon; ++k) {
            auto xk = static_cast<std::uint64_t>(std::floor(x * static_cast<double>(k)));
            if (xk < 1) continue;
            report.max_ratio_condition1 =
                std::max(report.max_ratio_condition1, schedule.beta(xk) / schedule.beta(k));
        }
        for (int i = 0; i <= 10; ++i) {
            const double y = x + (1.0 - x) * i / 10.0;
            auto yt = static_cast<std::uint64_t>(std::floor(y * static_cast<double>(horizon)));
            report.max_gap_condition3 =
                std::max(report.max_gap_condition3, std::abs(1.0 - prefix[yt] / prefix[horizon]));
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// learner

Learner::Learner(std::size_t n_states, std::size_t n_actions, ClipBound bound, double gamma,
                 LearnerConfig config)
    : q_(n_states, n_actions, config.q_init),
      visits_(n_states, n_actions),
      rng_(config.seed),
      state_(config.initial_state),
      bound_(bound),
      gamma_(gamma),
      config_(std::move(config)) {
    if (n_states == 0 || n_actions == 0) throw ArgumentError("learner needs a nonempty table");
    if (state_ >= n_states) throw ConfigError("initial state out of range");
    if (!std::isfinite(config_.q_init)) throw ConfigError("Q initialization must be finite");
    if (bound_.mode != config_.mode) throw ConfigError("clip bound mode differs from learner mode");
    const auto& f = config_.f;
    if (f.kind == RviFunctional::Kind::reference_entry && (f.s_ref >= n_states || f.a_ref >= n_actions))
        throw ConfigError("reference entry of f outside the table");
    config_.exploration.validate(config_.waive_assumptions);
    if (!config_.waive_assumptions) {
        if (config_.mode == Mode::discounted) {
            config_.discounted.validate();
        } else {
            if (config_.average.family == ScheduleFamily::custom)
                throw ConfigError("custom schedules require waive_assumptions");
            auto verdict = validate_schedule(config_.average, 1000);
            if (!verdict.passed)
                throw ConfigError("learning rate " + config_.average.name() +
                                  " violates the schedule assumptions: " + verdict.reason);
        }
    }
}

ActionId Learner::act() {
    const std::size_t A = q_.n_actions();
    if (rng_.uniform() < config_.exploration.epsilon(step_)) return rng_.index(A);
    auto row = q_.row(state_);
    const double best = *std::max_element(row.begin(), row.end());
    const double cut = best - config_.tie_tolerance;
    std::size_t ties = 0;
    for (double v : row)
        if (v >= cut) ++ties;
    std::size_t pick = ties == 1 ? 0 : rng_.index(ties);
    for (ActionId a = 0; a < A; ++a) {
        if (row[a] >= cut) {
            if (pick == 0) return a;
            --pick;
        }
    }
    return A - 1;
}

double Learner::observe(ActionId a, double reward_sample, std::span<const double> constraint_samples,
                        StateId next_state) {
    const double clipped = transform_sample(reward_sample, constraint_samples, bound_);
    const std::uint64_t n = visits_.record(state_, a);
    if (config_.mode == Mode::discounted)
        q_update_discounted(q_, state_, a, clipped, next_state, gamma_, config_.discounted.alpha(n));
    else
        rvi_update_average(q_, state_, a, clipped, next_state, config_.average.beta(n), config_.f);
    state_ = next_state;
    ++step_;
    return clipped;
}

LearnerFootprint Learner::footprint() const noexcept {
    LearnerFootprint fp;
    fp.q_entries = q_.size();
    fp.counter_entries = visits_.entries();
    fp.bytes = fp.q_entries * sizeof(double) + fp.counter_entries * sizeof(std::uint64_t) +
               sizeof(state_) + sizeof(step_) + sizeof(bound_) + sizeof(gamma_) +
               sizeof(std::uint64_t) /* total steps */ + sizeof(Rng);
    return fp;
}

bool LogCadence::should_log(std::uint64_t step) {
    if (step <= 1000) return true;
    if (!primed_) {
        while (std::ceil(next_geometric_) <= 1000.0) next_geometric_ *= 1.05;
        primed_ = true;
    }
    const double s = static_cast<double>(step);
    while (std::ceil(next_geometric_) < s) next_geometric_ *= 1.05;
    if (std::ceil(next_geometric_) != s) return false;
    while (std::ceil(next_geometric_) <= s) next_geometric_ *= 1.05;
    return true;
}

double resolve_gamma(const LearnerConfig& config, std::optional<double> instance_gamma) {
    if (config.mode == Mode::average) {
        if (config.gamma) throw ConfigError("gamma supplied in average mode");
        return 0.0;
    }
    auto g = config.gamma ? config.gamma : instance_gamma;
    if (!g) throw ConfigError("discounted mode needs gamma (instance or learner config)");
    if (!(*g > 0.0 && *g < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
    return *g;
}

LearningResult run_learning(const Environment& env, const ClipBound& bound,
                            std::optional<double> instance_gamma, const LearnerConfig& config,
                            const LearningOptions& options) {
    const double gamma = resolve_gamma(config, instance_gamma);
    Learner learner(env.n_states(), env.n_actions(), bound, gamma, config);
    if (options.reference_q && !options.reference_q->same_shape(learner.q()))
        throw ConfigError("reference Q table has the wrong shape");

    const std::size_t J = env.n_constraints();
    std::vector<double> samples(J);
    LearningResult result;
    result.violations_per_constraint.assign(J, 0);
    LogCadence cadence;
    double reward_sum = 0.0;

    for (std::uint64_t k = 1; k <= config.steps; ++k) {
        const StateId s = learner.state();
        const ActionId a = learner.act();
        const Observation obs = env.step(s, a, samples, learner.rng());
        const double clipped = learner.observe(a, obs.reward, samples, obs.next_state);

        bool violated = false;
        for (std::size_t j = 0; j < J; ++j) {
            if (samples[j] < 0.0) {
                ++result.violations_per_constraint[j];
                violated = true;
            }
        }
        if (violated) ++result.violation_steps;
        reward_sum += obs.reward;

        if (options.on_record && (cadence.should_log(k) || (options.record_final && k == config.steps))) {
            ExperimentRecord rec;
            rec.step = k;
            rec.state = s;
            rec.action = a;
            rec.raw_reward = obs.reward;
            rec.clipped_reward = clipped;
            rec.violations.resize(J);
            for (std::size_t j = 0; j < J; ++j) rec.violations[j] = samples[j] < 0.0;
            rec.cumulative_violations = result.violation_steps;
            if (options.reference_q) rec.sup_error = sup_distance(learner.q(), *options.reference_q);
            rec.avg_reward = reward_sum / static_cast<double>(k);
            if (config.mode == Mode::average) rec.f_q = config.f(learner.q());
            options.on_record(rec);
        }
    }

    result.q = learner.q();
    result.visits = learner.visits();
    result.avg_reward = config.steps ? reward_sum / static_cast<double>(config.steps) : 0.0;
    if (options.reference_q) result.final_sup_error = sup_distance(result.q, *options.reference_q);
    if (config.mode == Mode::average) result.final_f = config.f(result.q);
    result.footprint = learner.footprint();
    return result;
}

LearningResult run_learning(const MdpInstance& inst, const LearnerConfig& config,
                            const LearningOptions& options) {
    InstanceEnvironment env(inst);
    const double gamma = resolve_gamma(config, inst.gamma());
    const auto bound = clip_bound(inst.bound_c(),
                                  config.mode == Mode::discounted ? std::optional<double>(gamma)
                                                                  : std::nullopt,
                                  config.mode);
    return run_learning(env, bound, inst.gamma(), config, options);
}

} // namespace peakrl
