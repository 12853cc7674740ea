#include "peakrl/core/transform.hpp"

#include <cmath>
#include <vector>

namespace peakrl {

ClipBound clip_bound(double c, std::optional<double> gamma, Mode mode) {
    if (!(c > 0.0) || !std::isfinite(c)) throw ArgumentError("clip bound: c must be positive");
    if (mode == Mode::average) {
        if (gamma) throw ArgumentError("clip bound: gamma must be absent in average mode");
        return {Mode::average, c};
    }
    if (!gamma) throw ArgumentError("clip bound: gamma is required in discounted mode");
    const double g = *gamma;
    if (!(g > 0.0 && g < 1.0)) throw ArgumentError("clip bound: gamma must lie in (0, 1)");
    return {Mode::discounted, c * g / (1.0 - g)};
}

ClipBound clip_bound_for(const MdpInstance& inst, Mode mode) {
    if (mode == Mode::discounted && !inst.gamma())
        throw ConfigError("discounted mode needs an instance with gamma");
    return clip_bound(inst.bound_c(), mode == Mode::discounted ? inst.gamma() : std::nullopt, mode);
}

RewardTable transform_table(const MdpInstance& inst, const ClipBound& bound) {
    RewardTable t(inst.n_states(), inst.n_actions());
    std::vector<double> g(inst.n_constraints());
    for (StateId s = 0; s < inst.n_states(); ++s) {
        for (ActionId a = 0; a < inst.n_actions(); ++a) {
            inst.constraint_samples(s, a, g);
            t(s, a) = transform_sample(inst.reward(s, a), g, bound);
        }
    }
    return t;
}

} // namespace peakrl
