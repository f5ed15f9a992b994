#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace minmax {

/// Raised when a model violates a structural invariant (bad row sum,
/// non-absorbing goal, empty safe-goal set, ...). CLI exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised on malformed serialized input. CLI exit code 2.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when an analysis requires C > 0 but the MDP has none
/// (no pair of proper policies disagrees about where trajectories end).
/// CLI exit code 3.
struct UncontrollableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when policy enumeration would exceed the configured cap.
/// CLI exit code 4.
struct CapExceededError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Row sums must match 1 to this tolerance.
inline constexpr double kRowSumTol = 1e-12;
/// Tolerance for downstream probability comparisons.
inline constexpr double kProbTol = 1e-9;

/// Deterministic random source. Wraps mt19937_64 but converts to doubles
/// by hand so draws are identical across standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform double in [0, 1).
    double next_double() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    int next_int(int n) {
        int k = static_cast<int>(next_double() * n);
        return k >= n ? n - 1 : k;
    }

  private:
    std::mt19937_64 gen_;
};

/// Tabular stochastic-shortest-path MDP. States are dense indices
/// 0..num_states-1; `goals` is the absorbing set, `unsafe_goals` the
/// absorbing states a safe policy avoids. Immutable after construction
/// (validate once, then share freely across threads).
struct TabularMdp {
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> transition;  // (s, a, s') row-major, size S*A*S
    std::vector<double> reward;      // (s, a, s') row-major, size S*A*S
    std::vector<int> goals;          // sorted, unique
    std::vector<int> unsafe_goals;   // sorted, unique, strict subset of goals
    int initial_state = 0;

    double p(int s, int a, int s2) const {
        return transition[(static_cast<std::size_t>(s) * num_actions + a) * num_states + s2];
    }
    double r(int s, int a, int s2) const {
        return reward[(static_cast<std::size_t>(s) * num_actions + a) * num_states + s2];
    }
    double& p_ref(int s, int a, int s2) {
        return transition[(static_cast<std::size_t>(s) * num_actions + a) * num_states + s2];
    }
    double& r_ref(int s, int a, int s2) {
        return reward[(static_cast<std::size_t>(s) * num_actions + a) * num_states + s2];
    }

    bool is_goal(int s) const { return std::binary_search(goals.begin(), goals.end(), s); }
    bool is_unsafe(int s) const {
        return std::binary_search(unsafe_goals.begin(), unsafe_goals.end(), s);
    }

    /// Internal (non-absorbing) state indices, ascending.
    std::vector<int> internal_states() const {
        std::vector<int> out;
        out.reserve(num_states - goals.size());
        for (int s = 0; s < num_states; ++s)
            if (!is_goal(s)) out.push_back(s);
        return out;
    }

    /// O(1) membership mask over all states; true at goals.
    std::vector<std::uint8_t> goal_mask() const {
        std::vector<std::uint8_t> m(num_states, 0);
        for (int g : goals) m[g] = 1;
        return m;
    }
    std::vector<std::uint8_t> unsafe_mask() const {
        std::vector<std::uint8_t> m(num_states, 0);
        for (int g : unsafe_goals) m[g] = 1;
        return m;
    }
};

/// Deterministic policy: action per internal state; -1 at absorbing states.
struct DetPolicy {
    std::vector<int> action_of;

    bool operator==(const DetPolicy& other) const = default;
};

struct RewardBounds {
    double r_min = 0;
    double r_max = 0;
};

inline TabularMdp make_mdp(int num_states, int num_actions) {
    TabularMdp m;
    m.num_states = num_states;
    m.num_actions = num_actions;
    std::size_t n = static_cast<std::size_t>(num_states) * num_actions * num_states;
    m.transition.assign(n, 0.0);
    m.reward.assign(n, 0.0);
    return m;
}

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace detail

/// Checks every structural invariant and throws ValidationError naming the
/// first violation (with state/action indices where applicable).
inline void validate(const TabularMdp& m) {
    if (m.num_states < 2) throw ValidationError("num_states must be >= 2");
    if (m.num_actions < 1) throw ValidationError("num_actions must be >= 1");
    std::size_t n = static_cast<std::size_t>(m.num_states) * m.num_actions * m.num_states;
    if (m.transition.size() != n)
        throw ValidationError("transition tensor has wrong size");
    if (m.reward.size() != n) throw ValidationError("reward tensor has wrong size");

    auto sorted_unique_in_range = [&](const std::vector<int>& v, const char* name) {
        if (!std::is_sorted(v.begin(), v.end()) ||
            std::adjacent_find(v.begin(), v.end()) != v.end())
            throw ValidationError(std::string(name) + " must be sorted and unique");
        for (int s : v)
            if (s < 0 || s >= m.num_states)
                throw ValidationError(std::string(name) + " index " + std::to_string(s) +
                                      " out of range");
    };
    sorted_unique_in_range(m.goals, "goals");
    sorted_unique_in_range(m.unsafe_goals, "unsafe_goals");

    if (m.goals.empty()) throw ValidationError("goals must be non-empty");
    if (m.unsafe_goals.empty()) throw ValidationError("unsafe_goals must be non-empty");
    if (!std::includes(m.goals.begin(), m.goals.end(), m.unsafe_goals.begin(),
                       m.unsafe_goals.end()))
        throw ValidationError("unsafe_goals is not a subset of goals");
    if (m.unsafe_goals.size() == m.goals.size())
        throw ValidationError("no safe goal: unsafe_goals must be a strict subset of goals");
    if (static_cast<int>(m.goals.size()) == m.num_states)
        throw ValidationError("no internal states: every state is absorbing");
    if (m.initial_state < 0 || m.initial_state >= m.num_states)
        throw ValidationError("initial_state out of range");
    if (m.is_goal(m.initial_state)) throw ValidationError("initial_state must be internal");

    for (int s = 0; s < m.num_states; ++s) {
        bool goal = m.is_goal(s);
        for (int a = 0; a < m.num_actions; ++a) {
            double sum = 0.0;
            for (int s2 = 0; s2 < m.num_states; ++s2) {
                double pr = m.p(s, a, s2);
                if (pr < 0.0 || pr > 1.0 + kRowSumTol)
                    throw ValidationError("probability " + detail::fmt(pr) +
                                          " out of [0,1] at state " + std::to_string(s) +
                                          " action " + std::to_string(a) + " next " +
                                          std::to_string(s2));
                sum += pr;
            }
            if (goal) {
                if (std::abs(m.p(s, a, s) - 1.0) > kRowSumTol)
                    throw ValidationError("goal state " + std::to_string(s) +
                                          " is not absorbing under action " +
                                          std::to_string(a));
                if (m.r(s, a, s) != 0.0)
                    throw ValidationError("absorbing self-loop at goal state " +
                                          std::to_string(s) + " action " + std::to_string(a) +
                                          " carries nonzero reward");
            }
            if (std::abs(sum - 1.0) > kRowSumTol)
                throw ValidationError("transition row sum " + detail::fmt(sum) +
                                      " != 1 at state " + std::to_string(s) + " action " +
                                      std::to_string(a));
        }
    }
}

/// States reachable from the initial state via positive-probability
/// transitions under any action.
inline std::vector<std::uint8_t> reachable_states(const TabularMdp& m) {
    std::vector<std::uint8_t> seen(m.num_states, 0);
    std::vector<int> stack{m.initial_state};
    seen[m.initial_state] = 1;
    while (!stack.empty()) {
        int s = stack.back();
        stack.pop_back();
        if (m.is_goal(s)) continue;
        for (int a = 0; a < m.num_actions; ++a)
            for (int s2 = 0; s2 < m.num_states; ++s2)
                if (m.p(s, a, s2) > 0.0 && !seen[s2]) {
                    seen[s2] = 1;
                    stack.push_back(s2);
                }
    }
    return seen;
}

/// Min/max reward over reachable, positive-probability transitions leaving
/// internal states. Absorbing self-loops are never included.
inline RewardBounds reward_bounds(const TabularMdp& m) {
    auto reach = reachable_states(m);
    bool any = false;
    RewardBounds b{0.0, 0.0};
    for (int s = 0; s < m.num_states; ++s) {
        if (m.is_goal(s) || !reach[s]) continue;
        for (int a = 0; a < m.num_actions; ++a)
            for (int s2 = 0; s2 < m.num_states; ++s2) {
                if (m.p(s, a, s2) <= 0.0) continue;
                double rw = m.r(s, a, s2);
                if (!any) {
                    b.r_min = b.r_max = rw;
                    any = true;
                } else {
                    b.r_min = std::min(b.r_min, rw);
                    b.r_max = std::max(b.r_max, rw);
                }
            }
    }
    return b;
}

/// One environment step: draws s' from transition(s, a, .) and returns
/// (s', reward). Deterministic given the rng seed and draw count.
inline std::pair<int, double> sample_step(const TabularMdp& m, int s, int a, Rng& rng) {
    if (m.is_goal(s))
        throw std::invalid_argument("stepping terminal state " + std::to_string(s));
    double u = rng.next_double();
    double acc = 0.0;
    int last_pos = -1;
    for (int s2 = 0; s2 < m.num_states; ++s2) {
        double pr = m.p(s, a, s2);
        if (pr <= 0.0) continue;
        last_pos = s2;
        acc += pr;
        if (u < acc) return {s2, m.r(s, a, s2)};
    }
    // float residue: land on the last positive-probability entry
    return {last_pos, m.r(s, a, last_pos)};
}

}  // namespace minmax
