#include "peakrl/core/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

namespace peakrl {

using io::Json;

namespace {

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Linear-interpolation quantile of sorted data.
double quantile(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return NAN;
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Json quantiles(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    return Json{{"median", quantile(xs, 0.5)}, {"q1", quantile(xs, 0.25)}, {"q3", quantile(xs, 0.75)},
                {"iqr", quantile(xs, 0.75) - quantile(xs, 0.25)}};
}

std::vector<ActionId> first_argmax(const QTable& q) {
    std::vector<ActionId> out(q.n_states());
    for (StateId s = 0; s < q.n_states(); ++s) {
        auto row = q.row(s);
        out[s] = static_cast<ActionId>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

bool same_action_sets(const StochasticPolicy& a, const StochasticPolicy& b) {
    for (StateId s = 0; s < a.n_states(); ++s)
        if (a.support(s) != b.support(s)) return false;
    return true;
}

void write_record(std::string& out, const ExperimentRecord& rec, Mode mode) {
    out += std::to_string(rec.step);
    out += ',' + std::to_string(rec.state);
    out += ',' + std::to_string(rec.action);
    out += ',' + num(rec.raw_reward);
    out += ',' + num(rec.clipped_reward);
    for (bool v : rec.violations) out += v ? ",1" : ",0";
    out += ',' + std::to_string(rec.cumulative_violations);
    out += ',';
    if (rec.sup_error) out += num(*rec.sup_error);
    out += ',' + num(rec.avg_reward);
    if (mode == Mode::average) out += ',' + (rec.f_q ? num(*rec.f_q) : std::string());
    out += '\n';
}

} // namespace

std::string metrics_header(Mode mode, std::size_t n_constraints) {
    std::string h = "step,state,action,raw_reward,clipped_reward";
    for (std::size_t j = 1; j <= n_constraints; ++j) h += ",violation_" + std::to_string(j);
    h += ",cumulative_violations,sup_error,avg_reward";
    if (mode == Mode::average) h += ",f_q";
    return h;
}

// ---------------------------------------------------------------------------
// validate

CommandResult validate_instance(const MdpInstance& inst) {
    Json checks = Json::array();
    bool all_passed = true;
    auto add = [&](const std::string& name, std::optional<bool> passed, Json extra) {
        extra["name"] = name;
        extra["passed"] = passed ? Json(*passed) : Json(nullptr);
        if (passed && !*passed) all_passed = false;
        checks.push_back(std::move(extra));
    };

    add("kernel_row_sums", true, Json{{"detail", "every kernel row sums to 1 within 1e-9"}});
    add("bounded_rewards", true, Json{{"detail", "|r| and |r^j| are bounded by c"}, {"bound_c", inst.bound_c()}});

    {
        StateId ws = 0;
        ActionId wa = 0;
        double lo = INFINITY;
        for (StateId s = 0; s < inst.n_states(); ++s)
            for (ActionId a = 0; a < inst.n_actions(); ++a)
                if (inst.reward(s, a) < lo) {
                    lo = inst.reward(s, a);
                    ws = s;
                    wa = a;
                }
        Json extra{{"min_reward", lo}, {"witness", {{"state", ws}, {"action", wa}}}};
        if (lo <= 0.0) extra["detail"] = "shift the reward by c + epsilon to restore positivity";
        add("positive_reward", lo > 0.0, std::move(extra));
    }

    try {
        add("unichain", check_unichain(inst).passed, io::to_json(check_unichain(inst)));
    } catch (const CapabilityError& e) {
        add("unichain", std::nullopt, Json{{"detail", e.what()}});
    }

    try {
        if (auto s_star = inst.recurrent_state()) {
            auto r = check_recurrent_state(inst, *s_star);
            Json extra = io::to_json(r);
            extra["state"] = *s_star;
            add("recurrent_state", r.passed, std::move(extra));
        } else {
            std::optional<StateId> found;
            for (StateId s = 0; s < inst.n_states() && !found; ++s)
                if (check_recurrent_state(inst, s).passed) found = s;
            Json extra;
            if (found)
                extra["state"] = *found;
            else
                extra["detail"] = "no state is recurrent under every deterministic policy";
            add("recurrent_state", found.has_value(), std::move(extra));
        }
    } catch (const CapabilityError& e) {
        add("recurrent_state", std::nullopt, Json{{"detail", e.what()}});
    }

    Json report{{"n_states", inst.n_states()},
                {"n_actions", inst.n_actions()},
                {"n_constraints", inst.n_constraints()},
                {"checks", std::move(checks)},
                {"all_passed", all_passed}};
    return {std::move(report), all_passed ? ExitCode::success : ExitCode::validation_failure};
}

// ---------------------------------------------------------------------------
// solve

CommandResult solve_instance(const MdpInstance& raw, const SolveOptions& options) {
    const Mode mode = options.mode.value_or(raw.gamma() ? Mode::discounted : Mode::average);
    const MdpInstance inst = ensure_positive_reward(raw);
    const double shift = inst.reward_shift() - raw.reward_shift();
    const double c = inst.bound_c();
    const ClipBound bound = clip_bound_for(inst, mode);

    TransformedSolution sol = mode == Mode::discounted
                                  ? transformed_value_iteration(inst, bound, options.tol * c)
                                  : transformed_relative_value_iteration(inst, options.tol * c);
    const FeasibilityVerdict verdict = feasibility_check(sol.q, sol.value.gain, default_feasibility_tolerance(inst));
    const StochasticPolicy greedy = greedy_policy(sol.q, 1e-9 * c);

    Json report;
    report["mode"] = to_string(mode);
    report["reward_shift"] = shift;
    report["bound_c"] = c;
    report["clip_bound"] = bound.value;
    report["q_star"] = io::table_to_json(sol.q);
    report[mode == Mode::discounted ? "v_star_per_state" : "h_star"] = sol.value.values;
    if (sol.value.gain) {
        report["v_star"] = *sol.value.gain;
        report["s_ref"] = sol.value.s_ref;
    }
    report["iterations"] = sol.iterations;
    report["verdict"] = io::to_json(verdict);
    report["policy"] = Json{{"actions", first_argmax(sol.q)}, {"probabilities", io::table_to_json(greedy.probs())}};

    try {
        const BruteForceResult brute = brute_force_policy_search(inst, mode);
        Json b{{"feasible", true}, {"policy", brute.policy}, {"value", brute.value}, {"policies_evaluated", brute.policies_evaluated}};
        if (mode == Mode::discounted) {
            b["values"] = brute.values;
            std::vector<double> unshifted = brute.values;
            for (double& v : unshifted) v -= shift / (1.0 - *inst.gamma());
            b["unshifted_values"] = unshifted;
        } else {
            b["unshifted_value"] = brute.value - shift;
        }
        report["brute_force"] = std::move(b);
        report["audit"] = io::to_json(equivalence_audit(raw, mode, 1e-6 * c));
    } catch (const InfeasibleError& e) {
        report["brute_force"] = Json{{"feasible", false}, {"detail", e.what()}};
    } catch (const CapabilityError& e) {
        report["brute_force"] = Json{{"skipped", true}, {"detail", e.what()}};
    }

    return {std::move(report), verdict.status == Verdict::infeasible ? ExitCode::infeasible : ExitCode::success};
}

// ---------------------------------------------------------------------------
// audit battery

AuditBatteryParams audit_params_from_json(const Json& doc) {
    AuditBatteryParams p;
    try {
        p.count = doc.value("count", p.count);
        p.n_states = doc.value("n_states", p.n_states);
        p.n_actions = doc.value("n_actions", p.n_actions);
        p.n_constraints = doc.value("n_constraints", p.n_constraints);
        if (doc.contains("mode")) p.mode = parse_mode(doc["mode"].get<std::string>());
        p.gamma = doc.value("gamma", p.gamma);
        p.bound_c = doc.value("bound_c", p.bound_c);
        p.seed = doc.value("seed", p.seed);
        p.tol = doc.value("tol", p.tol);
        p.recurrent_state = doc.value("recurrent_state", p.recurrent_state);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("audit parameters: ") + e.what());
    }
    return p;
}

CommandResult audit_battery(const AuditBatteryParams& p) {
    if (p.count == 0) throw ConfigError("audit battery needs at least one instance");
    Json instances = Json::array();
    std::size_t passed = 0;
    double worst_policy_gap = 0.0, worst_value_gap = 0.0;
    for (std::size_t i = 0; i < p.count; ++i) {
        RandomInstanceParams rp;
        rp.n_states = p.n_states;
        rp.n_actions = p.n_actions;
        rp.n_constraints = p.n_constraints;
        rp.mode = FeasibilityMode::guaranteed_feasible;
        rp.seed = derive_seed(p.seed, i);
        rp.bound_c = p.bound_c;
        if (p.mode == Mode::discounted)
            rp.gamma = p.gamma;
        else
            rp.recurrent_state = p.recurrent_state;
        const MdpInstance inst = random_instance(rp);
        const AuditReport r = equivalence_audit(inst, p.mode, p.tol * p.bound_c);
        passed += r.passed;
        worst_policy_gap = std::max(worst_policy_gap, r.policy_value_gap);
        worst_value_gap = std::max(worst_value_gap, r.transformed_value_gap);
        Json entry = io::to_json(r);
        entry["index"] = i;
        entry["seed"] = rp.seed;
        instances.push_back(std::move(entry));
    }
    Json report{{"mode", to_string(p.mode)},
                {"count", p.count},
                {"passed", passed},
                {"all_passed", passed == p.count},
                {"max_policy_value_gap", worst_policy_gap},
                {"max_transformed_value_gap", worst_value_gap},
                {"instances", std::move(instances)}};
    return {std::move(report), passed == p.count ? ExitCode::success : ExitCode::validation_failure};
}

// ---------------------------------------------------------------------------
// learn

ExperimentConfig experiment_config_from_json(const Json& doc, const std::filesystem::path& base_dir,
                                             ExperimentConfig c) {
    if (!doc.is_object()) throw ConfigError("experiment config must be an object");
    try {
        if (auto it = doc.find("instance"); it != doc.end()) {
            if (it->is_string()) {
                std::filesystem::path path = it->get<std::string>();
                c.instance_path = path.is_relative() ? base_dir / path : path;
                c.instance_spec.reset();
            } else if (it->is_object()) {
                c.instance_spec = *it;
                c.instance_path.reset();
            } else {
                throw ConfigError("'instance' must be a path or an environment spec object");
            }
        }
        if (auto it = doc.find("learner"); it != doc.end()) c.learner = io::learner_config_from_json(*it, c.learner);
        if (auto it = doc.find("mode"); it != doc.end()) c.learner.mode = parse_mode(it->get<std::string>());
        if (auto it = doc.find("steps"); it != doc.end()) c.learner.steps = it->get<std::uint64_t>();
        if (auto it = doc.find("replications"); it != doc.end()) {
            if (!it->is_number_integer() || it->get<long long>() < 0) throw ConfigError("replications must be a nonnegative integer");
            c.replications = it->get<std::size_t>();
        }
        if (auto it = doc.find("seed"); it != doc.end()) c.master_seed = it->get<std::uint64_t>();
        if (auto it = doc.find("oracle"); it != doc.end()) c.oracle = it->get<bool>();
        if (auto it = doc.find("output_dir"); it != doc.end()) c.output_dir = it->get<std::string>();
        if (auto it = doc.find("threads"); it != doc.end()) c.threads = it->get<std::size_t>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("experiment config: ") + e.what());
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("experiment config: ") + e.what());
    }
    return c;
}

void validate_experiment_config(const ExperimentConfig& c) {
    if (c.replications < 1) throw ConfigError("replication count must be at least 1");
    if (!c.instance_path && !c.instance_spec) throw ConfigError("no instance given");
    if (c.learner.mode == Mode::average && c.learner.gamma) throw ConfigError("gamma supplied in average mode");
}

CommandResult run_experiment(const ExperimentConfig& config) {
    validate_experiment_config(config);
    const MdpInstance raw = config.instance_path ? io::load_instance(*config.instance_path)
                                                 : io::environment_from_json(*config.instance_spec);
    const MdpInstance inst = ensure_positive_reward(raw);
    const Mode mode = config.learner.mode;
    const double gamma = resolve_gamma(config.learner, inst.gamma());
    const double c = inst.bound_c();
    const ClipBound bound =
        clip_bound(c, mode == Mode::discounted ? std::optional<double>(gamma) : std::nullopt, mode);

    Json oracle_doc = nullptr;
    std::optional<QTable> reference;
    std::optional<StochasticPolicy> optimal;
    std::optional<double> v_star;
    if (config.oracle) {
        if (mode == Mode::discounted) {
            MdpData d = inst.data();
            d.gamma = gamma;
            const auto sol = transformed_value_iteration(MdpInstance::create(std::move(d)), bound, 1e-12 * c);
            reference = sol.q;
        } else {
            const auto sol = transformed_relative_value_iteration(inst, 1e-12 * c);
            v_star = sol.value.gain;
            reference = rvi_fixed_point(sol.q, *v_star, config.learner.f);
        }
        optimal = greedy_policy(*reference, 1e-9 * c);
        oracle_doc = Json{{"q_star", io::table_to_json(*reference)}, {"optimal_policy", io::table_to_json(optimal->probs())}};
        if (v_star) oracle_doc["v_star"] = *v_star;
    }

    std::filesystem::create_directories(config.output_dir);
    const std::size_t R = config.replications;
    std::vector<LearningResult> results(R);
    std::vector<std::uint64_t> seeds(R);
    std::vector<std::exception_ptr> errors(R);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t r = next++; r < R; r = next++) {
            try {
                LearnerConfig lc = config.learner;
                lc.seed = seeds[r] = derive_seed(config.master_seed, r);
                std::string csv = metrics_header(mode, inst.n_constraints()) + '\n';
                LearningOptions opts;
                opts.reference_q = reference;
                opts.on_record = [&csv, mode](const ExperimentRecord& rec) { write_record(csv, rec, mode); };
                results[r] = run_learning(inst, lc, opts);
                io::write_text_file(config.output_dir / ("rep_" + std::to_string(r) + ".csv"), csv);
            } catch (...) {
                errors[r] = std::current_exception();
            }
        }
    };
    std::size_t n_threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min(n_threads, R);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    Json reps = Json::array();
    std::vector<double> errors_final, f_gaps;
    std::uint64_t total_violations = 0;
    std::size_t matches = 0;
    for (std::size_t r = 0; r < R; ++r) {
        const auto& res = results[r];
        Json e{{"replication", r},
               {"seed", seeds[r]},
               {"violation_steps", res.violation_steps},
               {"violations_per_constraint", res.violations_per_constraint},
               {"avg_reward", res.avg_reward},
               {"final_greedy_actions", first_argmax(res.q)}};
        total_violations += res.violation_steps;
        if (res.final_sup_error) {
            e["final_sup_error"] = *res.final_sup_error;
            errors_final.push_back(*res.final_sup_error);
        }
        if (res.final_f) e["final_f"] = *res.final_f;
        if (res.final_f && v_star) {
            e["f_gap"] = std::abs(*res.final_f - *v_star);
            f_gaps.push_back(std::abs(*res.final_f - *v_star));
        }
        if (optimal) {
            const bool match = same_action_sets(greedy_policy(res.q, config.learner.tie_tolerance), *optimal);
            e["policy_match"] = match;
            matches += match;
        }
        reps.push_back(std::move(e));
    }

    Json summary;
    summary["mode"] = to_string(mode);
    summary["replications"] = R;
    summary["steps"] = config.learner.steps;
    summary["master_seed"] = config.master_seed;
    summary["seed_rule"] = "seed_r = splitmix64(master + (r + 1) * 0x9E3779B97F4A7C15)";
    summary["bound_c"] = c;
    summary["clip_bound"] = bound.value;
    summary["reward_shift"] = inst.reward_shift() - raw.reward_shift();
    summary["learner"] = io::learner_config_to_json(config.learner);
    summary["oracle"] = oracle_doc;
    summary["total_violation_steps"] = total_violations;
    if (!errors_final.empty()) summary["final_sup_error"] = quantiles(errors_final);
    if (!f_gaps.empty()) summary["f_gap"] = quantiles(f_gaps);
    if (optimal) summary["policy_match_count"] = matches;
    summary["per_replication"] = std::move(reps);
    io::write_text_file(config.output_dir / "summary.json", summary.dump(2) + "\n");
    return {std::move(summary), ExitCode::success};
}

} // namespace peakrl
