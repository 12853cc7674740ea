#include "peakrl/core/oracle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace peakrl {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double span_of(const std::vector<double>& v) {
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
}

MatrixXd policy_matrix(const MdpInstance& inst, const StochasticPolicy& policy) {
    const std::size_t S = inst.n_states();
    MatrixXd P = MatrixXd::Zero(S, S);
    for (StateId s = 0; s < S; ++s)
        for (ActionId a = 0; a < inst.n_actions(); ++a) {
            const double w = policy.prob(s, a);
            if (w == 0.0) continue;
            auto row = inst.kernel_row(s, a);
            for (StateId n = 0; n < S; ++n) P(s, n) += w * row[n];
        }
    return P;
}

VectorXd policy_reward(const StochasticPolicy& policy, const RewardTable& r) {
    VectorXd out = VectorXd::Zero(static_cast<Eigen::Index>(r.n_states()));
    for (StateId s = 0; s < r.n_states(); ++s)
        for (ActionId a = 0; a < r.n_actions(); ++a) out(s) += policy.prob(s, a) * r(s, a);
    return out;
}

double expected_next(const MdpInstance& inst, StateId s, ActionId a, const std::vector<double>& v) {
    auto row = inst.kernel_row(s, a);
    double e = 0.0;
    for (StateId n = 0; n < row.size(); ++n) e += row[n] * v[n];
    return e;
}

double require_gamma(const MdpInstance& inst) {
    if (!inst.gamma()) throw ConfigError("discounted solve needs an instance with gamma");
    return *inst.gamma();
}

} // namespace

const char* to_string(Verdict v) noexcept {
    switch (v) {
    case Verdict::feasible: return "feasible";
    case Verdict::infeasible: return "infeasible";
    case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

ActionSets restricted_action_sets(const MdpInstance& inst) {
    ActionSets sets(inst.n_states());
    for (StateId s = 0; s < inst.n_states(); ++s)
        for (ActionId a = 0; a < inst.n_actions(); ++a) {
            bool ok = true;
            for (std::size_t j = 0; j < inst.n_constraints() && ok; ++j) ok = inst.constraint(j, s, a) >= 0.0;
            if (ok) sets[s].push_back(a);
        }
    return sets;
}

std::vector<char> constraint_safe_states(const MdpInstance& inst) {
    const std::size_t S = inst.n_states();
    const auto sets = restricted_action_sets(inst);
    std::vector<char> safe(S, 1);
    bool changed = true;
    while (changed) {
        changed = false;
        for (StateId s = 0; s < S; ++s) {
            if (!safe[s]) continue;
            bool keeps = false;
            for (ActionId a : sets[s]) {
                auto row = inst.kernel_row(s, a);
                bool inside = true;
                for (StateId n = 0; n < S && inside; ++n) inside = row[n] == 0.0 || safe[n];
                if (inside) {
                    keeps = true;
                    break;
                }
            }
            if (!keeps) {
                safe[s] = 0;
                changed = true;
            }
        }
    }
    return safe;
}

ConstrainedSolution constrained_value_iteration(const MdpInstance& inst, double tol) {
    if (!(tol > 0.0)) throw ArgumentError("tolerance must be positive");
    const double gamma = require_gamma(inst);
    const std::size_t S = inst.n_states();
    const auto safe = constraint_safe_states(inst);
    for (StateId s = 0; s < S; ++s)
        if (!safe[s])
            throw InfeasibleError("state " + std::to_string(s) +
                                  " cannot satisfy the peak constraints under any policy");
    const auto sets = restricted_action_sets(inst);

    const double stop = tol * (1.0 - gamma) / (2.0 * gamma);
    std::vector<double> v(S, 0.0), next(S);
    ConstrainedSolution sol;
    while (true) {
        double delta = 0.0;
        for (StateId s = 0; s < S; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (ActionId a : sets[s]) best = std::max(best, inst.reward(s, a) + gamma * expected_next(inst, s, a, v));
            next[s] = best;
            delta = std::max(delta, std::abs(best - v[s]));
        }
        v.swap(next);
        ++sol.iterations;
        if (delta < stop) break;
    }

    StateActionTable probs(S, inst.n_actions(), 0.0);
    for (StateId s = 0; s < S; ++s) {
        std::vector<double> qs;
        double best = -std::numeric_limits<double>::infinity();
        for (ActionId a : sets[s]) {
            qs.push_back(inst.reward(s, a) + gamma * expected_next(inst, s, a, v));
            best = std::max(best, qs.back());
        }
        std::vector<ActionId> arg;
        for (std::size_t i = 0; i < qs.size(); ++i)
            if (qs[i] >= best - tol) arg.push_back(sets[s][i]);
        for (ActionId a : arg) probs(s, a) = 1.0 / static_cast<double>(arg.size());
    }
    sol.value.values = std::move(v);
    sol.policy = StochasticPolicy(std::move(probs));
    return sol;
}

TransformedSolution transformed_value_iteration(const MdpInstance& inst, const ClipBound& bound,
                                                double tol) {
    if (!(tol > 0.0)) throw ArgumentError("tolerance must be positive");
    if (bound.mode != Mode::discounted) throw ArgumentError("discounted solve needs a discounted clip bound");
    const double gamma = require_gamma(inst);
    const std::size_t S = inst.n_states(), A = inst.n_actions();
    const RewardTable r = transform_table(inst, bound);
    const double stop = tol * (1.0 - gamma) / (2.0 * gamma);

    TransformedSolution sol;
    QTable q(S, A, 0.0), next(S, A);
    std::vector<double> v(S, 0.0);
    while (true) {
        for (StateId s = 0; s < S; ++s) v[s] = q.row_max(s);
        for (StateId s = 0; s < S; ++s)
            for (ActionId a = 0; a < A; ++a) next(s, a) = r(s, a) + gamma * expected_next(inst, s, a, v);
        const double delta = sup_distance(next, q);
        std::swap(q, next);
        ++sol.iterations;
        if (delta < stop) break;
    }
    for (StateId s = 0; s < S; ++s) v[s] = q.row_max(s);
    sol.q = std::move(q);
    sol.value.values = std::move(v);
    return sol;
}

TransformedSolution transformed_relative_value_iteration(const MdpInstance& inst, double tol,
                                                         const RviOptions& options) {
    if (!(tol > 0.0)) throw ArgumentError("tolerance must be positive");
    if (!(options.damping > 0.0 && options.damping <= 1.0)) throw ArgumentError("damping must lie in (0, 1]");
    const std::size_t S = inst.n_states(), A = inst.n_actions();
    const StateId s_ref = options.s_ref.value_or(inst.recurrent_state().value_or(0));
    if (s_ref >= S) throw IndexError("normalization state out of range");
    const RewardTable r = transform_table(inst, clip_bound(inst.bound_c(), std::nullopt, Mode::average));
    const double tau = options.damping;

    std::vector<double> h(S, 0.0), gain(S, 0.0);
    std::deque<double> trace;
    TransformedSolution sol;
    double span = std::numeric_limits<double>::infinity();
    while (true) {
        for (StateId s = 0; s < S; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (ActionId a = 0; a < A; ++a) best = std::max(best, r(s, a) + expected_next(inst, s, a, h));
            gain[s] = best - h[s];
        }
        ++sol.iterations;
        span = span_of(gain);
        trace.push_back(span);
        if (trace.size() > 8) trace.pop_front();
        if (span < tol) break;
        if (sol.iterations >= options.max_iterations) {
            std::ostringstream os;
            os.precision(6);
            os << "relative value iteration did not converge in " << options.max_iterations
               << " iterations; last spans:";
            for (double x : trace) os << ' ' << x;
            throw NumericError(os.str());
        }
        const double g_ref = gain[s_ref];
        for (StateId s = 0; s < S; ++s) h[s] += tau * (gain[s] - g_ref);
    }

    auto [lo, hi] = std::minmax_element(gain.begin(), gain.end());
    const double v = 0.5 * (*lo + *hi);
    QTable q(S, A);
    for (StateId s = 0; s < S; ++s)
        for (ActionId a = 0; a < A; ++a) q(s, a) = r(s, a) + expected_next(inst, s, a, h) - v;
    sol.q = std::move(q);
    sol.value.values = std::move(h);
    sol.value.gain = v;
    sol.value.s_ref = s_ref;
    return sol;
}

QTable rvi_fixed_point(const QTable& qstar, double v_star, const RviFunctional& f) {
    QTable out = qstar;
    const double shift = v_star - f(qstar);
    for (double& x : out.flat()) x += shift;
    return out;
}

std::vector<double> evaluate_discounted(const MdpInstance& inst, const StochasticPolicy& policy,
                                        const RewardTable& r, double gamma) {
    const auto S = static_cast<Eigen::Index>(inst.n_states());
    MatrixXd M = MatrixXd::Identity(S, S) - gamma * policy_matrix(inst, policy);
    VectorXd v = M.partialPivLu().solve(policy_reward(policy, r));
    return {v.data(), v.data() + v.size()};
}

std::vector<double> stationary_distribution(const MdpInstance& inst, const StochasticPolicy& policy) {
    const auto S = static_cast<Eigen::Index>(inst.n_states());
    // mu^T (I - P) = 0 together with sum(mu) = 1, as an (S+1) x S system.
    MatrixXd M(S + 1, S);
    M.topRows(S) = (MatrixXd::Identity(S, S) - policy_matrix(inst, policy)).transpose();
    M.row(S).setOnes();
    VectorXd rhs = VectorXd::Zero(S + 1);
    rhs(S) = 1.0;
    Eigen::ColPivHouseholderQR<MatrixXd> qr(M);
    qr.setThreshold(1e-12);
    if (qr.rank() < S) throw NumericError("policy induces more than one recurrent class");
    VectorXd mu = qr.solve(rhs);
    return {mu.data(), mu.data() + mu.size()};
}

double evaluate_average(const MdpInstance& inst, const StochasticPolicy& policy, const RewardTable& r) {
    const auto mu = stationary_distribution(inst, policy);
    const VectorXd rp = policy_reward(policy, r);
    double g = 0.0;
    for (std::size_t s = 0; s < mu.size(); ++s) g += mu[s] * rp(static_cast<Eigen::Index>(s));
    return g;
}

BruteForceResult brute_force_policy_search(const MdpInstance& inst, Mode mode) {
    require_enumerable(inst, "brute_force_policy_search");
    const auto sets = restricted_action_sets(inst);
    for (StateId s = 0; s < sets.size(); ++s)
        if (sets[s].empty())
            throw InfeasibleError("no feasible policy exists: state " + std::to_string(s) +
                                  " has no constraint-satisfying action");
    const double gamma = mode == Mode::discounted ? require_gamma(inst) : 0.0;
    const RewardTable r = inst.reward_table();

    BruteForceResult best;
    best.value = -std::numeric_limits<double>::infinity();
    for_each_policy(sets, [&](const std::vector<ActionId>& policy) {
        ++best.policies_evaluated;
        const auto pi = StochasticPolicy::deterministic(policy, inst.n_actions());
        if (mode == Mode::discounted) {
            auto v = evaluate_discounted(inst, pi, r, gamma);
            double mean = 0.0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            if (mean > best.value) {
                best.value = mean;
                best.values = std::move(v);
                best.policy = policy;
            }
        } else {
            const double g = evaluate_average(inst, pi, r);
            if (g > best.value) {
                best.value = g;
                best.policy = policy;
            }
        }
        return true;
    });
    return best;
}

FeasibilityVerdict feasibility_check(const QTable& qstar, std::optional<double> v_star, double tol) {
    if (!(tol >= 0.0)) throw ArgumentError("tolerance must be nonnegative");
    FeasibilityVerdict verdict;
    verdict.tolerance = tol;
    verdict.witness.resize(qstar.n_states());
    for (StateId s = 0; s < qstar.n_states(); ++s) verdict.witness[s] = qstar.row_max(s) + v_star.value_or(0.0);
    verdict.margin = *std::min_element(verdict.witness.begin(), verdict.witness.end());
    if (verdict.margin > tol)
        verdict.status = Verdict::feasible;
    else if (verdict.margin < -tol)
        verdict.status = Verdict::infeasible;
    else
        verdict.status = Verdict::inconclusive;
    return verdict;
}

AuditReport equivalence_audit(const MdpInstance& raw, Mode mode, double tol, const AuditOptions& options) {
    const MdpInstance inst = ensure_positive_reward(raw);
    const std::size_t S = inst.n_states();
    AuditReport report;
    report.mode = mode;
    report.tolerance = tol;
    report.reward_shift = inst.reward_shift() - raw.reward_shift();

    const BruteForceResult brute = brute_force_policy_search(inst, mode);
    report.constrained_optimum = brute.value;

    TransformedSolution solved;
    const double solver_tol = options.solver_tolerance * inst.bound_c();
    if (mode == Mode::discounted)
        solved = transformed_value_iteration(inst, clip_bound_for(inst, mode), solver_tol);
    else
        solved = transformed_relative_value_iteration(inst, solver_tol);
    report.verdict = feasibility_check(solved.q, solved.value.gain, default_feasibility_tolerance(inst));
    report.greedy = greedy_policy(solved.q, 1e-9 * inst.bound_c());

    // reachability under the greedy policy's support graph
    report.reachable.assign(S, 0);
    std::vector<StateId> stack;
    if (options.initial_states.empty()) {
        for (StateId s = 0; s < S; ++s) stack.push_back(s);
    } else {
        for (StateId s : options.initial_states) {
            if (s >= S) throw IndexError("initial state out of range");
            stack.push_back(s);
        }
    }
    for (StateId s : stack) report.reachable[s] = 1;
    while (!stack.empty()) {
        StateId u = stack.back();
        stack.pop_back();
        for (ActionId a : report.greedy.support(u)) {
            auto row = inst.kernel_row(u, a);
            for (StateId n = 0; n < S; ++n)
                if (row[n] > 0.0 && !report.reachable[n]) {
                    report.reachable[n] = 1;
                    stack.push_back(n);
                }
        }
    }

    const auto sets = restricted_action_sets(inst);
    for (StateId s = 0; s < S; ++s) {
        if (!report.reachable[s]) continue;
        for (ActionId a : report.greedy.support(s)) {
            if (std::find(sets[s].begin(), sets[s].end(), a) == sets[s].end()) {
                report.support_feasible = false;
                report.counterexamples.push_back(
                    {"infeasible_action", s, a, solved.q(s, a), "greedy policy takes a constraint-violating action"});
            }
        }
    }

    const RewardTable r = inst.reward_table();
    if (mode == Mode::discounted) {
        const auto v = evaluate_discounted(inst, report.greedy, r, *inst.gamma());
        double mean = 0.0;
        for (StateId s = 0; s < S; ++s) {
            report.policy_value_gap = std::max(report.policy_value_gap, std::abs(v[s] - brute.values[s]));
            report.transformed_value_gap =
                std::max(report.transformed_value_gap, std::abs(solved.value.values[s] - brute.values[s]));
            mean += solved.value.values[s];
        }
        report.transformed_optimum = mean / static_cast<double>(S);
    } else {
        const double g = evaluate_average(inst, report.greedy, r);
        report.policy_value_gap = std::abs(g - brute.value);
        report.transformed_optimum = *solved.value.gain;
        report.transformed_value_gap = std::abs(*solved.value.gain - brute.value);
    }
    if (report.policy_value_gap > tol)
        report.counterexamples.push_back({"policy_value_gap", 0, 0, report.policy_value_gap,
                                          "greedy policy value differs from the constrained optimum"});
    if (report.transformed_value_gap > tol)
        report.counterexamples.push_back({"transformed_value_gap", 0, 0, report.transformed_value_gap,
                                          "transformed optimal value differs from the constrained optimum"});
    report.passed = report.counterexamples.empty();
    return report;
}

} // namespace peakrl
