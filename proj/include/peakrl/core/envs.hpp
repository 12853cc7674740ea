#pragma once

#include "peakrl/core/environment.hpp"
#include "peakrl/core/mdp.hpp"

#include <optional>
#include <vector>

namespace peakrl {

/// Channel-state / bandwidth-allocation problem: minimize power P(s, a)
/// subject to the QoS margin q(s, a) - b >= 0 at every step.
struct WirelessEnvSpec {
    std::size_t n_channel_states = 0;
    std::size_t n_bandwidth_actions = 0;
    StateActionTable power;
    StateActionTable qos;
    double qos_floor = 0.0;
    /// kernel[s][a][s_next], flattened as in MdpData.
    std::vector<double> kernel;
    std::optional<double> gamma;
    /// Defaults to max(max P, max |q - b|).
    std::optional<double> bound_c;
    /// Positivity shift; defaults to 0.1 c.
    std::optional<double> epsilon;
    std::optional<StateId> recurrent_state;
};

/// r = -P shifted positive, r^1 = q - b. The shift is kept in reward_shift().
MdpInstance compile_wireless(const WirelessEnvSpec& spec);

/// Document placement: state i cycles through the documents, action j is the
/// display position. Attention values stay inside the compiled tables; the
/// learner only sees samples.
struct SearchEngineEnvSpec {
    std::size_t n_documents = 0;
    std::vector<double> engine_values; // u_i
    std::vector<double> user_values;   // v_i
    std::vector<double> attention;     // A_j
    double qos_floor = 0.0;            // q
    std::optional<double> gamma;
    std::optional<double> bound_c;
};

/// reward u_i A_j, constraint v_i A_j - q, kernel i -> (i + 1) mod n.
MdpInstance compile_search_engine(const SearchEngineEnvSpec& spec);

enum class FeasibilityMode { guaranteed_feasible, guaranteed_infeasible, unconstrained_random };

FeasibilityMode parse_feasibility_mode(const std::string& text);
const char* to_string(FeasibilityMode mode) noexcept;

struct RandomInstanceParams {
    std::size_t n_states = 4;
    std::size_t n_actions = 3;
    std::size_t n_constraints = 2;
    FeasibilityMode mode = FeasibilityMode::guaranteed_feasible;
    std::uint64_t seed = 0;
    double bound_c = 1.0;
    std::optional<double> gamma;
    double min_kernel_entry = 0.01;
    /// Planted recurrent state: every row sends at least recurrent_mass to it.
    std::optional<StateId> recurrent_state;
    double recurrent_mass = 0.2;
};

/// Reproducible random instance. Kernel rows are normalized exponential draws
/// floored at min_kernel_entry; rewards are uniform in (0, c]. Constraint signs
/// follow params.mode:
///   guaranteed_feasible    every state keeps an all-nonnegative action
///   guaranteed_infeasible  one random state has none
///   unconstrained_random   signs drawn independently
MdpInstance random_instance(const RandomInstanceParams& params);

/// Adds zero-mean uniform noise in [-amplitude, amplitude] to constraint samples.
/// Robustness experiments only.
class NoisyConstraintEnvironment : public Environment {
public:
    NoisyConstraintEnvironment(const Environment& base, double amplitude);

    std::size_t n_states() const override { return base_.n_states(); }
    std::size_t n_actions() const override { return base_.n_actions(); }
    std::size_t n_constraints() const override { return base_.n_constraints(); }
    Observation step(StateId s, ActionId a, std::span<double> constraint_out, Rng& rng) const override;

private:
    const Environment& base_;
    double amplitude_;
};

} // namespace peakrl
