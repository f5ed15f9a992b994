#pragma once

#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "minmax/linalg.hpp"
#include "minmax/mdp.hpp"

namespace minmax {

/// Exact per-policy evaluation of the Markov chain a deterministic policy
/// induces. Vectors are indexed by state; absorbing entries hold their
/// natural boundary values (safe goal: safe_prob 1; unsafe goal: 0; goals:
/// hit_time and value 0). hit_time and value are NaN when the policy is
/// improper.
struct PolicyEval {
    std::vector<double> safe_prob;
    std::vector<double> hit_time;
    std::vector<double> value;
    bool proper = false;
};

namespace detail {

inline void check_policy(const TabularMdp& m, const DetPolicy& pi) {
    if (static_cast<int>(pi.action_of.size()) != m.num_states)
        throw std::invalid_argument("policy size does not match num_states");
    for (int s = 0; s < m.num_states; ++s) {
        if (m.is_goal(s)) continue;
        int a = pi.action_of[s];
        if (a < 0 || a >= m.num_actions)
            throw std::invalid_argument("policy has no valid action at internal state " +
                                        std::to_string(s));
    }
}

/// States with a positive-probability path to the absorbing set under pi.
/// A policy is proper exactly when every internal state is in this set:
/// from such states absorption happens with probability one.
inline std::vector<std::uint8_t> can_reach_goals(const TabularMdp& m, const DetPolicy& pi) {
    std::vector<std::uint8_t> reach(m.num_states, 0);
    for (int g : m.goals) reach[g] = 1;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int s = 0; s < m.num_states; ++s) {
            if (reach[s] || m.is_goal(s)) continue;
            int a = pi.action_of[s];
            for (int s2 = 0; s2 < m.num_states; ++s2)
                if (m.p(s, a, s2) > 0.0 && reach[s2]) {
                    reach[s] = 1;
                    changed = true;
                    break;
                }
        }
    }
    return reach;
}

}  // namespace detail

inline bool is_proper(const TabularMdp& m, const DetPolicy& pi) {
    detail::check_policy(m, pi);
    auto reach = detail::can_reach_goals(m, pi);
    for (int s = 0; s < m.num_states; ++s)
        if (!m.is_goal(s) && !reach[s]) return false;
    return true;
}

/**
 * Solves the linear fixed points of the induced chain:
 *   safe_prob(s) = sum_{s'} P(s, pi(s), s') safe_prob(s'),  1 on safe goals, 0 on unsafe
 *   hit_time(s)  = 1 + sum_{s' internal} P hit_time(s'),    0 on goals
 *   value(s)     = sum_{s'} P (r + value(s')),               0 on goals
 *
 * safe_prob is always well defined (states that cannot reach the absorbing
 * set contribute probability zero); the other two only for proper policies.
 */
inline PolicyEval evaluate_policy(const TabularMdp& m, const DetPolicy& pi) {
    detail::check_policy(m, pi);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    PolicyEval ev;
    ev.safe_prob.assign(m.num_states, 0.0);
    ev.hit_time.assign(m.num_states, 0.0);
    ev.value.assign(m.num_states, 0.0);
    for (int g : m.goals)
        if (!m.is_unsafe(g)) ev.safe_prob[g] = 1.0;

    auto reach = detail::can_reach_goals(m, pi);
    ev.proper = true;
    for (int s = 0; s < m.num_states; ++s)
        if (!m.is_goal(s) && !reach[s]) ev.proper = false;

    // solve over internal states that can reach the absorbing set; the
    // restricted I - Q is nonsingular there
    std::vector<int> solved;
    std::vector<int> pos(m.num_states, -1);
    for (int s = 0; s < m.num_states; ++s)
        if (!m.is_goal(s) && reach[s]) {
            pos[s] = static_cast<int>(solved.size());
            solved.push_back(s);
        }
    int n = static_cast<int>(solved.size());
    if (n > 0) {
        linalg::Dense A(n);
        std::vector<double> b_safe(n, 0.0), b_hit(n, 1.0), b_val(n, 0.0);
        for (int i = 0; i < n; ++i) {
            int s = solved[i];
            int a = pi.action_of[s];
            A.at(i, i) = 1.0;
            for (int s2 = 0; s2 < m.num_states; ++s2) {
                double pr = m.p(s, a, s2);
                if (pr <= 0.0) continue;
                if (pos[s2] >= 0) A.at(i, pos[s2]) -= pr;
                if (m.is_goal(s2) && !m.is_unsafe(s2)) b_safe[i] += pr;
                b_val[i] += pr * m.r(s, a, s2);
            }
        }
        auto x = linalg::solve(A, b_safe);
        for (int i = 0; i < n; ++i) ev.safe_prob[solved[i]] = std::clamp(x[i], 0.0, 1.0);
        if (ev.proper) {
            auto t = linalg::solve(A, b_hit);
            auto v = linalg::solve(A, b_val);
            for (int i = 0; i < n; ++i) {
                ev.hit_time[solved[i]] = t[i];
                ev.value[solved[i]] = v[i];
            }
        }
    }
    if (!ev.proper) {
        for (int s = 0; s < m.num_states; ++s)
            if (!m.is_goal(s)) {
                ev.hit_time[s] = nan;
                ev.value[s] = nan;
            }
    }
    return ev;
}

/// Number of deterministic policies |A|^|internal|, saturating at 2^64-1.
inline std::uint64_t policy_count(const TabularMdp& m) {
    std::uint64_t count = 1;
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max();
    int k = static_cast<int>(m.internal_states().size());
    for (int i = 0; i < k; ++i) {
        if (count > limit / m.num_actions) return limit;
        count *= m.num_actions;
    }
    return count;
}

/// All deterministic proper policies, lexicographic by action indices over
/// ascending internal states. Throws CapExceededError (naming the count)
/// instead of silently sampling when |A|^|internal| > cap.
inline std::vector<DetPolicy> enumerate_proper_policies(const TabularMdp& m,
                                                        std::uint64_t cap = 1'000'000) {
    auto internal = m.internal_states();
    std::uint64_t total = policy_count(m);
    if (total > cap)
        throw CapExceededError("deterministic policy count |A|^|S_int| = " +
                               (total == std::numeric_limits<std::uint64_t>::max()
                                    ? std::string("over 2^64")
                                    : std::to_string(total)) +
                               " exceeds cap " + std::to_string(cap));

    std::vector<DetPolicy> out;
    DetPolicy pi;
    pi.action_of.assign(m.num_states, -1);
    std::vector<int> digits(internal.size(), 0);
    while (true) {
        for (std::size_t i = 0; i < internal.size(); ++i)
            pi.action_of[internal[i]] = digits[i];
        if (is_proper(m, pi)) out.push_back(pi);
        int i = static_cast<int>(digits.size()) - 1;
        while (i >= 0 && digits[i] == m.num_actions - 1) digits[i--] = 0;
        if (i < 0) break;
        ++digits[i];
    }
    return out;
}

enum class ControllabilityVariant {
    pairs_max,   // min over policy pairs of the max per-state gap (camera-ready form)
    states_min,  // min over policy pairs of the min per-state gap
};

inline const char* to_string(ControllabilityVariant v) {
    return v == ControllabilityVariant::pairs_max ? "pairs-max" : "states-min";
}

struct ControllabilityResult {
    double C = 0.0;
    bool degenerate = false;  // fewer than two behaviorally distinct proper policies
    int pair_first = -1;      // indices into the policy list handed in
    int pair_second = -1;
};

inline std::vector<PolicyEval> evaluate_all(const TabularMdp& m,
                                            const std::vector<DetPolicy>& policies) {
    std::vector<PolicyEval> evals;
    evals.reserve(policies.size());
    for (const auto& pi : policies) evals.push_back(evaluate_policy(m, pi));
    return evals;
}

/**
 * Degree of controllability: the smallest safe-termination-probability gap
 * any two behaviorally distinct proper policies can force. Policies whose
 * safe_prob vectors agree within tolerance are collapsed to one
 * representative first; otherwise indifferent states (or duplicated
 * policies) would drive C to zero in every MDP.
 */
inline ControllabilityResult controllability(
    const TabularMdp& m, const std::vector<DetPolicy>& policies,
    const std::vector<PolicyEval>& evals,
    ControllabilityVariant variant = ControllabilityVariant::pairs_max) {
    auto internal = m.internal_states();
    std::vector<int> reps;  // first policy index per distinct safe_prob vector
    for (std::size_t i = 0; i < policies.size(); ++i) {
        bool fresh = true;
        for (int rep : reps) {
            bool same = true;
            for (int s : internal)
                if (std::abs(evals[i].safe_prob[s] - evals[rep].safe_prob[s]) > kProbTol) {
                    same = false;
                    break;
                }
            if (same) {
                fresh = false;
                break;
            }
        }
        if (fresh) reps.push_back(static_cast<int>(i));
    }

    ControllabilityResult res;
    if (reps.size() < 2) {
        res.degenerate = true;
        return res;
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < reps.size(); ++i)
        for (std::size_t j = i + 1; j < reps.size(); ++j) {
            double d = variant == ControllabilityVariant::pairs_max
                           ? 0.0
                           : std::numeric_limits<double>::infinity();
            for (int s : internal) {
                double gap =
                    std::abs(evals[reps[i]].safe_prob[s] - evals[reps[j]].safe_prob[s]);
                d = variant == ControllabilityVariant::pairs_max ? std::max(d, gap)
                                                                 : std::min(d, gap);
            }
            if (d < best) {
                best = d;
                res.pair_first = reps[i];
                res.pair_second = reps[j];
            }
        }
    res.C = best;
    return res;
}

inline ControllabilityResult controllability(
    const TabularMdp& m, const std::vector<DetPolicy>& policies,
    ControllabilityVariant variant = ControllabilityVariant::pairs_max) {
    return controllability(m, policies, evaluate_all(m, policies), variant);
}

/// Largest expected absorption time over proper policies and internal states.
inline double diameter(const TabularMdp& m, const std::vector<DetPolicy>& policies,
                       const std::vector<PolicyEval>& evals) {
    if (policies.empty()) throw std::invalid_argument("diameter needs a non-empty policy set");
    double d = 0.0;
    for (std::size_t i = 0; i < policies.size(); ++i) {
        if (!evals[i].proper)
            throw std::invalid_argument("diameter is defined over proper policies only");
        for (int s = 0; s < m.num_states; ++s)
            if (!m.is_goal(s)) d = std::max(d, evals[i].hit_time[s]);
    }
    return d;
}

inline double diameter(const TabularMdp& m, const std::vector<DetPolicy>& policies) {
    return diameter(m, policies, evaluate_all(m, policies));
}

/// Per-state best safe-termination probability over the policy set; the
/// brute-force safe-policy oracle.
inline std::vector<double> optimal_safe_prob(const TabularMdp& m,
                                             const std::vector<DetPolicy>& /*policies*/,
                                             const std::vector<PolicyEval>& evals) {
    std::vector<double> best(m.num_states, 0.0);
    for (int g : m.goals)
        if (!m.is_unsafe(g)) best[g] = 1.0;
    for (const auto& ev : evals)
        for (int s = 0; s < m.num_states; ++s)
            if (!m.is_goal(s)) best[s] = std::max(best[s], ev.safe_prob[s]);
    return best;
}

inline std::vector<double> optimal_safe_prob(const TabularMdp& m,
                                             const std::vector<DetPolicy>& policies) {
    return optimal_safe_prob(m, policies, evaluate_all(m, policies));
}

/// Everything the Minmax penalty computation produced, kept together so the
/// numbers can be audited against the policy set that generated them.
struct SafetyAnalysis {
    double controllability = 0.0;
    double diameter = 0.0;
    double r_min = 0.0;  // analysis reward bounds; see minmax_penalty
    double r_max = 0.0;
    double minmax_penalty = 0.0;
    std::vector<DetPolicy> proper_policies;
    int argmin_first = -1;  // pair attaining C, as indices into proper_policies
    int argmin_second = -1;
    ControllabilityVariant variant = ControllabilityVariant::pairs_max;
};

/**
 * Minmax penalty: min(R_MIN, (R_MIN - R_MAX) * D / C).
 *
 * The bounds feeding the formula are the transition reward bounds widened
 * by 0, the reward the absorbing self-loops carry: the reward function's
 * range over the whole SSP includes that terminal zero, and the safety
 * bound needs R_MAX >= 0 to hold (an all-negative task would otherwise
 * understate the value an optimal policy can collect before termination).
 */
inline SafetyAnalysis minmax_penalty(
    const TabularMdp& m, std::uint64_t cap = 1'000'000,
    ControllabilityVariant variant = ControllabilityVariant::pairs_max) {
    validate(m);
    SafetyAnalysis out;
    out.variant = variant;
    out.proper_policies = enumerate_proper_policies(m, cap);
    auto evals = evaluate_all(m, out.proper_policies);

    auto ctrl = controllability(m, out.proper_policies, evals, variant);
    if (ctrl.degenerate || ctrl.C <= kProbTol)
        throw UncontrollableError(
            "uncontrollable MDP: controllability C = " + detail::fmt(ctrl.C) +
            (ctrl.degenerate ? " (degenerate policy set: fewer than two behaviorally "
                               "distinct proper policies)"
                             : "") +
            "; the Minmax penalty requires C > 0");
    out.controllability = ctrl.C;
    out.argmin_first = ctrl.pair_first;
    out.argmin_second = ctrl.pair_second;
    out.diameter = diameter(m, out.proper_policies, evals);

    RewardBounds raw = reward_bounds(m);
    out.r_min = std::min(raw.r_min, 0.0);
    out.r_max = std::max(raw.r_max, 0.0);
    out.minmax_penalty = std::min(
        out.r_min, (out.r_min - out.r_max) * out.diameter / out.controllability);
    return out;
}

/// Report consumed by the CLI's analyze subcommand.
inline nlohmann::json to_report(const SafetyAnalysis& a) {
    nlohmann::json j;
    j["C"] = a.controllability;
    j["D"] = a.diameter;
    j["r_min"] = a.r_min;
    j["r_max"] = a.r_max;
    j["minmax_penalty"] = a.minmax_penalty;
    j["n_proper_policies"] = a.proper_policies.size();
    j["controllability_variant"] = to_string(a.variant);
    if (a.argmin_first >= 0)
        j["argmin_pair"] = {a.proper_policies[a.argmin_first].action_of,
                            a.proper_policies[a.argmin_second].action_of};
    return j;
}

}  // namespace minmax
