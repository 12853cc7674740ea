#pragma once

#include "peakrl/core/io.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace peakrl {

/// Process exit codes shared by the CLI and the C API.
enum class ExitCode : int { success = 0, validation_failure = 2, infeasible = 3, runtime_error = 4 };

struct CommandResult {
    io::Json report;
    ExitCode code = ExitCode::success;
};

/// Runs every assumption validator on an instance: bounds and kernel (by
/// construction), positive reward, unichain, recurrent state.
CommandResult validate_instance(const MdpInstance& inst);

struct SolveOptions {
    /// Defaults to discounted when the instance has gamma, else average.
    std::optional<Mode> mode;
    /// Solver tolerance relative to c.
    double tol = 1e-10;
};

/// Transformed DP, feasibility verdict, brute-force oracle and equivalence audit.
/// The report doubles as the solution document.
CommandResult solve_instance(const MdpInstance& inst, const SolveOptions& options = {});

struct AuditBatteryParams {
    std::size_t count = 100;
    std::size_t n_states = 4;
    std::size_t n_actions = 3;
    std::size_t n_constraints = 2;
    Mode mode = Mode::discounted;
    double gamma = 0.9;
    double bound_c = 1.0;
    std::uint64_t seed = 1;
    double tol = 1e-6;
    /// Planted recurrent state for average mode.
    StateId recurrent_state = 0;
};

AuditBatteryParams audit_params_from_json(const io::Json& doc);

/// Equivalence audit over random guaranteed-feasible instances.
CommandResult audit_battery(const AuditBatteryParams& params);

struct ExperimentConfig {
    /// Exactly one of instance_path / instance_spec is used.
    std::optional<std::filesystem::path> instance_path;
    std::optional<io::Json> instance_spec;
    LearnerConfig learner;
    std::size_t replications = 1;
    std::uint64_t master_seed = 0;
    bool oracle = true;
    std::filesystem::path output_dir = "peakrl-out";
    /// Worker threads; 0 picks the hardware concurrency.
    std::size_t threads = 0;
};

/// Reads a config document. Relative instance paths resolve against base_dir.
ExperimentConfig experiment_config_from_json(const io::Json& doc, const std::filesystem::path& base_dir,
                                             ExperimentConfig defaults = {});

/// Checks the cross-field invariants (replications >= 1, gamma iff discounted, ...).
void validate_experiment_config(const ExperimentConfig& config);

/// Runs the seeded replications, writes rep_<r>.csv per replication and
/// summary.json into the output directory and returns the summary.
CommandResult run_experiment(const ExperimentConfig& config);

/// CSV header for a metrics file.
std::string metrics_header(Mode mode, std::size_t n_constraints);

} // namespace peakrl
