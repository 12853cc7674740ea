#pragma once

#include "peakrl/core/mdp.hpp"

#include <optional>
#include <vector>

namespace peakrl::testing {

using Rows = std::vector<std::vector<double>>;

// kernel[s][a] is a row over next states; reward[s][a]; constraints[j][s][a].
inline MdpInstance make_instance(const std::vector<Rows>& kernel, const Rows& reward,
                                 const std::vector<Rows>& constraints, std::optional<double> gamma,
                                 double c = 1.0, std::optional<StateId> recurrent = std::nullopt) {
    MdpData d;
    d.n_states = kernel.size();
    d.n_actions = reward.front().size();
    for (const auto& per_state : kernel)
        for (const auto& row : per_state) d.kernel.insert(d.kernel.end(), row.begin(), row.end());
    for (const auto& row : reward) d.reward.insert(d.reward.end(), row.begin(), row.end());
    for (const auto& table : constraints) {
        std::vector<double> flat;
        for (const auto& row : table) flat.insert(flat.end(), row.begin(), row.end());
        d.constraints.push_back(std::move(flat));
    }
    d.gamma = gamma;
    d.bound_c = c;
    d.recurrent_state = recurrent;
    return MdpInstance::create(std::move(d));
}

// One state, two actions, r = [1, 1], constraint row [0.2, -0.1], gamma = 0.5, c = 1.
inline MdpInstance running_example() {
    return make_instance({{{1.0}, {1.0}}}, {{1.0, 1.0}}, {{{0.2, -0.1}}}, 0.5);
}

} // namespace peakrl::testing
