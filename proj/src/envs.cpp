#include "peakrl/core/envs.hpp"

#include <algorithm>
#include <cmath>

namespace peakrl {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

} // namespace

MdpInstance compile_wireless(const WirelessEnvSpec& spec) {
    const std::size_t S = spec.n_channel_states, A = spec.n_bandwidth_actions;
    require(S > 0 && A > 0, "wireless spec needs channel states and bandwidth actions");
    require(spec.power.n_states() == S && spec.power.n_actions() == A, "wireless power table has the wrong shape");
    require(spec.qos.n_states() == S && spec.qos.n_actions() == A, "wireless qos table has the wrong shape");
    require(spec.kernel.size() == S * A * S, "wireless kernel has the wrong size");

    MdpData d;
    d.n_states = S;
    d.n_actions = A;
    d.kernel = spec.kernel;
    d.gamma = spec.gamma;
    d.recurrent_state = spec.recurrent_state;
    d.reward.resize(S * A);
    d.constraints.assign(1, std::vector<double>(S * A));
    double c = 0.0;
    for (StateId s = 0; s < S; ++s)
        for (ActionId a = 0; a < A; ++a) {
            const double p = spec.power(s, a);
            require(p > 0.0 && std::isfinite(p), "wireless power must be positive");
            d.reward[s * A + a] = -p;
            d.constraints[0][s * A + a] = spec.qos(s, a) - spec.qos_floor;
            c = std::max({c, p, std::abs(spec.qos(s, a) - spec.qos_floor)});
        }
    d.bound_c = spec.bound_c.value_or(c);
    const MdpInstance raw = MdpInstance::create(std::move(d));
    return shift_reward(raw, spec.epsilon.value_or(default_shift_epsilon(raw)));
}

MdpInstance compile_search_engine(const SearchEngineEnvSpec& spec) {
    const std::size_t n = spec.n_documents, m = spec.attention.size();
    require(n > 0 && m > 0, "search engine spec needs documents and positions");
    require(spec.engine_values.size() == n, "engine_values must have one entry per document");
    require(spec.user_values.size() == n, "user_values must have one entry per document");

    MdpData d;
    d.n_states = n;
    d.n_actions = m;
    d.gamma = spec.gamma;
    d.kernel.assign(n * m * n, 0.0);
    d.reward.resize(n * m);
    d.constraints.assign(1, std::vector<double>(n * m));
    double c = 0.0;
    for (StateId i = 0; i < n; ++i)
        for (ActionId j = 0; j < m; ++j) {
            d.kernel[(i * m + j) * n + (i + 1) % n] = 1.0;
            d.reward[i * m + j] = spec.engine_values[i] * spec.attention[j];
            d.constraints[0][i * m + j] = spec.user_values[i] * spec.attention[j] - spec.qos_floor;
            c = std::max({c, std::abs(d.reward[i * m + j]), std::abs(d.constraints[0][i * m + j])});
        }
    d.bound_c = spec.bound_c.value_or(c > 0.0 ? c : 1.0);
    return MdpInstance::create(std::move(d));
}

FeasibilityMode parse_feasibility_mode(const std::string& text) {
    if (text == "guaranteed_feasible" || text == "feasible") return FeasibilityMode::guaranteed_feasible;
    if (text == "guaranteed_infeasible" || text == "infeasible") return FeasibilityMode::guaranteed_infeasible;
    if (text == "unconstrained_random" || text == "random") return FeasibilityMode::unconstrained_random;
    throw ArgumentError("unknown feasibility mode '" + text + "'");
}

const char* to_string(FeasibilityMode mode) noexcept {
    switch (mode) {
    case FeasibilityMode::guaranteed_feasible: return "guaranteed_feasible";
    case FeasibilityMode::guaranteed_infeasible: return "guaranteed_infeasible";
    case FeasibilityMode::unconstrained_random: return "unconstrained_random";
    }
    return "?";
}

MdpInstance random_instance(const RandomInstanceParams& p) {
    const std::size_t S = p.n_states, A = p.n_actions, J = p.n_constraints;
    if (S == 0 || A == 0) throw ArgumentError("random instance needs positive sizes");
    if (!(p.min_kernel_entry >= 0.0) || p.min_kernel_entry * static_cast<double>(S) > 1.0)
        throw ArgumentError("min_kernel_entry * n_states must not exceed 1");
    if (!(p.bound_c > 0.0)) throw ArgumentError("bound_c must be positive");
    if (p.mode == FeasibilityMode::guaranteed_infeasible && J == 0)
        throw ArgumentError("an infeasible instance needs at least one constraint");
    if (p.recurrent_state && *p.recurrent_state >= S) throw ArgumentError("recurrent state out of range");
    if (!(p.recurrent_mass >= 0.0 && p.recurrent_mass <= 1.0)) throw ArgumentError("recurrent_mass must lie in [0, 1]");

    Rng rng(p.seed);
    const double c = p.bound_c;
    MdpData d;
    d.n_states = S;
    d.n_actions = A;
    d.gamma = p.gamma;
    d.bound_c = c;
    d.recurrent_state = p.recurrent_state;

    d.kernel.resize(S * A * S);
    std::vector<double> w(S);
    for (std::size_t row = 0; row < S * A; ++row) {
        double total = 0.0;
        for (double& x : w) {
            x = -std::log1p(-rng.uniform());
            total += x;
        }
        const double free_mass = 1.0 - p.min_kernel_entry * static_cast<double>(S);
        for (StateId n = 0; n < S; ++n) {
            double prob = p.min_kernel_entry + free_mass * w[n] / total;
            if (p.recurrent_state)
                prob = (1.0 - p.recurrent_mass) * prob + (n == *p.recurrent_state ? p.recurrent_mass : 0.0);
            d.kernel[row * S + n] = prob;
        }
    }

    d.reward.resize(S * A);
    for (double& r : d.reward) r = c * (1.0 - rng.uniform());

    d.constraints.assign(J, std::vector<double>(S * A));
    auto nonneg = [&] { return c * rng.uniform(); };
    auto negative = [&] { return -c * (1.0 - rng.uniform()); };
    auto any_sign = [&] { return rng.uniform() < 0.5 ? nonneg() : negative(); };

    const StateId bad_state = rng.index(S);
    for (StateId s = 0; s < S; ++s) {
        const ActionId safe_action = rng.index(A);
        for (ActionId a = 0; a < A; ++a) {
            for (std::size_t j = 0; j < J; ++j) d.constraints[j][s * A + a] = any_sign();
            const bool poisoned = p.mode == FeasibilityMode::guaranteed_infeasible && s == bad_state;
            if (poisoned) {
                const std::size_t forced = rng.index(J);
                d.constraints[forced][s * A + a] = negative();
            } else if (p.mode != FeasibilityMode::unconstrained_random && a == safe_action) {
                for (std::size_t j = 0; j < J; ++j) d.constraints[j][s * A + a] = nonneg();
            }
        }
    }
    return MdpInstance::create(std::move(d));
}

NoisyConstraintEnvironment::NoisyConstraintEnvironment(const Environment& base, double amplitude)
    : base_(base), amplitude_(amplitude) {
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) throw ArgumentError("noise amplitude must be nonnegative");
}

Observation NoisyConstraintEnvironment::step(StateId s, ActionId a, std::span<double> constraint_out,
                                             Rng& rng) const {
    Observation obs = base_.step(s, a, constraint_out, rng);
    for (double& g : constraint_out) g += amplitude_ * (2.0 * rng.uniform() - 1.0);
    return obs;
}

} // namespace peakrl
