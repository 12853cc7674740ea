#pragma once

#include "peakrl/core/mdp.hpp"

#include <optional>
#include <span>

namespace peakrl {

/// Lower clip applied to rewards of constraint-violating samples.
/// Discounted: C = c*gamma/(1-gamma). Average: c.
struct ClipBound {
    Mode mode = Mode::discounted;
    double value = 0.0;
};

ClipBound clip_bound(double c, std::optional<double> gamma, Mode mode);

/// Clip bound matching the instance's c and gamma for the given mode.
ClipBound clip_bound_for(const MdpInstance& inst, Mode mode);

/// True when some constraint sample is strictly negative. Zero counts as satisfied.
inline bool violates(std::span<const double> constraint_samples) noexcept {
    for (double g : constraint_samples)
        if (g < 0.0) return true;
    return false;
}

/// Closed form of max(-B, min_{lambda >= 0} r + sum_j lambda_j g_j).
/// The inner minimum is r when every g_j >= 0 (lambda = 0) and unbounded below
/// otherwise, so the result is r or -B. Constant memory in J.
inline double transform_sample(double r_sample, std::span<const double> constraint_samples,
                               const ClipBound& bound) noexcept {
    return violates(constraint_samples) ? -bound.value : r_sample;
}

/// Entrywise transform of the instance's reward table. Only the oracle
/// materializes this; learners transform one sample at a time.
RewardTable transform_table(const MdpInstance& inst, const ClipBound& bound);

} // namespace peakrl
