// Command-line front end. Talks to the library exclusively through the C API.
//
// Precedence for learn: config file > command-line flags > PEAKRL_OUT > defaults.
// Exit codes: 0 success, 2 validation failure, 3 infeasible, 4 runtime error.

#include "peakrl/peakrl.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

namespace {

using Json = nlohmann::json;
namespace fs = std::filesystem;

enum Exit { kSuccess = 0, kValidation = 2, kInfeasible = 3, kRuntime = 4 };

int exit_for(prl_status status) {
    switch (status) {
    case PRL_OK: return kSuccess;
    case PRL_ERR_VALIDATION:
    case PRL_ERR_PARSE:
    case PRL_ERR_CONFIG:
    case PRL_ERR_INDEX:
    case PRL_ERR_ARGUMENT: return kValidation;
    case PRL_ERR_INFEASIBLE: return kInfeasible;
    default: return kRuntime;
    }
}

int report_error(prl_status status) {
    std::cerr << "peakrl: " << prl_status_string(status) << ": " << prl_last_error() << '\n';
    return exit_for(status);
}

struct CString {
    char* p = nullptr;
    ~CString() { prl_string_free(p); }
};

struct InstanceHandle {
    prl_instance* p = nullptr;
    ~InstanceHandle() { prl_instance_free(p); }
};

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text << '\n';
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::optional<std::string> env_out() {
    if (const char* v = std::getenv("PEAKRL_OUT"); v && *v) return std::string(v);
    return std::nullopt;
}

int mode_code(const std::string& mode) {
    if (mode.empty() || mode == "auto") return PRL_MODE_AUTO;
    if (mode == "discounted") return PRL_MODE_DISCOUNTED;
    if (mode == "average") return PRL_MODE_AVERAGE;
    throw CLI::ValidationError("--mode", "expected discounted or average");
}

int cmd_validate(const std::string& path) {
    InstanceHandle inst;
    if (auto st = prl_instance_load_file(path.c_str(), &inst.p); st != PRL_OK) return report_error(st);
    CString report;
    int ok = 0;
    if (auto st = prl_validate(inst.p, &report.p, &ok); st != PRL_OK) return report_error(st);
    std::cout << report.p << '\n';
    return ok ? kSuccess : kValidation;
}

int cmd_solve(const std::string& path, const std::string& mode, double tol, const std::string& out) {
    InstanceHandle inst;
    if (auto st = prl_instance_load_file(path.c_str(), &inst.p); st != PRL_OK) return report_error(st);
    CString solution;
    int verdict = PRL_INCONCLUSIVE;
    if (auto st = prl_solve(inst.p, mode_code(mode), tol, &solution.p, &verdict); st != PRL_OK)
        return report_error(st);
    if (!out.empty()) write_file(fs::path(out) / "solution.json", solution.p);
    std::cout << solution.p << '\n';
    return verdict == PRL_INFEASIBLE ? kInfeasible : kSuccess;
}

int cmd_audit(Json params, const std::string& out) {
    CString report;
    int ok = 0;
    const std::string text = params.dump();
    if (auto st = prl_audit(text.c_str(), &report.p, &ok); st != PRL_OK) return report_error(st);
    if (!out.empty()) write_file(fs::path(out) / "audit.json", report.p);
    const Json doc = Json::parse(report.p);
    std::cout << "audit " << doc["mode"].get<std::string>() << ": " << doc["passed"] << "/" << doc["count"]
              << " instances passed (max policy value gap " << doc["max_policy_value_gap"]
              << ", max transformed value gap " << doc["max_transformed_value_gap"] << ")\n";
    return ok ? kSuccess : kValidation;
}

int cmd_learn(const std::string& config_path, Json flags) {
    Json merged = std::move(flags);
    fs::path base = fs::current_path();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "peakrl: cannot open " << config_path << '\n';
            return kRuntime;
        }
        std::stringstream ss;
        ss << in.rdbuf();
        Json config;
        try {
            config = Json::parse(ss.str());
        } catch (const Json::parse_error& e) {
            std::cerr << "peakrl: " << config_path << ": " << e.what() << '\n';
            return kValidation;
        }
        merged.merge_patch(config);
        base = fs::absolute(config_path).parent_path();
    }
    CString summary;
    const std::string text = merged.dump();
    const std::string base_text = base.string();
    if (auto st = prl_learn(text.c_str(), base_text.c_str(), &summary.p); st != PRL_OK) return report_error(st);
    std::cout << summary.p << '\n';
    return kSuccess;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"peakrl: tabular learning for MDPs with peak constraints"};
    app.require_subcommand(1);

    std::string mode;
    double tol = 0.0;
    std::string out;

    auto* validate = app.add_subcommand("validate", "check an instance against the model assumptions");
    std::string validate_path;
    validate->add_option("instance", validate_path, "instance or environment spec file")->required();

    auto* solve = app.add_subcommand("solve", "solve the clipped problem exactly and certify feasibility");
    std::string solve_path;
    solve->add_option("instance", solve_path, "instance or environment spec file")->required();
    solve->add_option("--mode", mode, "discounted or average (default: from the instance)");
    solve->add_option("--tol", tol, "solver tolerance relative to c (default 1e-10)");
    solve->add_option("--out", out, "directory for solution.json");

    auto* learn = app.add_subcommand("learn", "run seeded learning replications");
    std::string config_path, instance_path, schedule, functional;
    std::uint64_t steps = 0, seed = 0;
    std::size_t reps = 0;
    double eps_floor = 0.0;
    learn->add_option("config", config_path, "experiment config file");
    learn->add_option("--instance", instance_path, "instance or environment spec file");
    learn->add_option("--mode", mode, "discounted or average");
    learn->add_option("--steps", steps, "steps per replication");
    learn->add_option("--reps", reps, "number of replications");
    learn->add_option("--seed", seed, "master seed");
    learn->add_option("--epsilon-floor", eps_floor, "exploration floor");
    learn->add_option("--schedule", schedule,
                      "average: 1/k or 1/(k log k); discounted: exponent omega of 1/(N+1)^omega");
    learn->add_option("--f", functional, "RVI functional: reference_entry(s,a), mean or max");
    learn->add_option("--out", out, "output directory");
    bool oracle = true;
    learn->add_flag("--oracle,!--no-oracle", oracle, "compute the exact Q* and report errors against it");

    auto* audit = app.add_subcommand("audit", "equivalence audit over random feasible instances");
    std::size_t count = 100, n_states = 4, n_actions = 3, n_constraints = 2;
    double gamma = 0.9;
    std::uint64_t audit_seed = 1;
    audit->add_option("--count", count, "number of instances")->capture_default_str();
    audit->add_option("--states", n_states, "states per instance")->capture_default_str();
    audit->add_option("--actions", n_actions, "actions per instance")->capture_default_str();
    audit->add_option("--constraints", n_constraints, "constraints per instance")->capture_default_str();
    audit->add_option("--gamma", gamma, "discount factor (discounted mode)")->capture_default_str();
    audit->add_option("--mode", mode, "discounted or average");
    audit->add_option("--seed", audit_seed, "battery seed")->capture_default_str();
    audit->add_option("--tol", tol, "value tolerance relative to c (default 1e-6)");
    audit->add_option("--out", out, "directory for audit.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kSuccess : kValidation;
    }

    try {
        if (*validate) return cmd_validate(validate_path);
        if (out.empty()) out = env_out().value_or("");
        if (*solve) return cmd_solve(solve_path, mode, tol, out);
        if (*audit) {
            Json params{{"count", count},       {"n_states", n_states}, {"n_actions", n_actions},
                        {"n_constraints", n_constraints}, {"gamma", gamma}, {"seed", audit_seed}};
            if (!mode.empty()) params["mode"] = mode;
            if (tol > 0.0) params["tol"] = tol;
            return cmd_audit(std::move(params), out);
        }
        if (*learn) {
            Json flags = Json::object();
            Json learner = Json::object();
            if (!instance_path.empty()) flags["instance"] = fs::absolute(instance_path).string();
            if (!mode.empty()) flags["mode"] = mode;
            if (learn->count("--steps")) flags["steps"] = steps;
            if (learn->count("--reps")) flags["replications"] = reps;
            if (learn->count("--seed")) flags["seed"] = seed;
            if (learn->count("--epsilon-floor")) learner["epsilon_floor"] = eps_floor;
            if (!schedule.empty()) {
                try {
                    std::size_t used = 0;
                    const double omega = std::stod(schedule, &used);
                    if (used != schedule.size()) throw std::invalid_argument(schedule);
                    learner["omega"] = omega;
                } catch (const std::exception&) {
                    learner["schedule"] = schedule;
                }
            }
            if (!functional.empty()) learner["f"] = functional;
            if (!learner.empty()) flags["learner"] = learner;
            if (!out.empty()) flags["output_dir"] = out;
            if (learn->count("--oracle") || learn->count("--no-oracle")) flags["oracle"] = oracle;
            if (config_path.empty() && instance_path.empty()) {
                std::cerr << "peakrl: learn needs a config file or --instance\n";
                return kValidation;
            }
            return cmd_learn(config_path, std::move(flags));
        }
    } catch (const CLI::Error& e) {
        std::cerr << "peakrl: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "peakrl: " << e.what() << '\n';
        return kRuntime;
    }
    return kRuntime;
}
