#pragma once

#include <cstdint>

#include "minmax/analysis.hpp"
#include "minmax/mdp.hpp"

namespace minmax {

/// Knobs for the seeded generator behind the property suites.
struct RandomMdpSpec {
    int min_internal = 2;
    int max_internal = 6;
    int min_actions = 2;
    int max_actions = 3;
    double min_controllability = 0.05;
};

/**
 * Seeded random SSP MDP: one safe and one unsafe absorbing state, both
 * reachable from every internal state (all transition weights are
 * positive), rewards uniform in [-1, -0.1] so every improper policy has
 * value -inf and the optimum stays proper. Rows are drawn from a symmetric
 * per-entry distribution, sharpened and normalized; candidates are
 * rejected until controllability exceeds the spec's floor.
 */
inline TabularMdp random_controllable_mdp(std::uint64_t seed,
                                          const RandomMdpSpec& spec = {}) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(seed * 0x9e3779b97f4a7c15ULL + attempt + 1);
        int n_int = spec.min_internal + rng.next_int(spec.max_internal - spec.min_internal + 1);
        int n_act = spec.min_actions + rng.next_int(spec.max_actions - spec.min_actions + 1);
        int S = n_int + 2;
        const int safe_goal = n_int, unsafe_goal = n_int + 1;

        TabularMdp m = make_mdp(S, n_act);
        for (int s = 0; s < n_int; ++s)
            for (int a = 0; a < n_act; ++a) {
                double total = 0.0;
                std::vector<double> w(S);
                for (int s2 = 0; s2 < S; ++s2) {
                    double u = rng.next_double();
                    w[s2] = 1e-4 + u * u * u * u;  // sharpened, strictly positive
                    total += w[s2];
                }
                for (int s2 = 0; s2 < S; ++s2) {
                    m.p_ref(s, a, s2) = w[s2] / total;
                    m.r_ref(s, a, s2) = -0.1 - 0.9 * rng.next_double();
                }
            }
        for (int a = 0; a < n_act; ++a) {
            m.p_ref(safe_goal, a, safe_goal) = 1.0;
            m.p_ref(unsafe_goal, a, unsafe_goal) = 1.0;
        }
        m.goals = {safe_goal, unsafe_goal};
        m.unsafe_goals = {unsafe_goal};
        m.initial_state = 0;
        validate(m);

        auto policies = enumerate_proper_policies(m);
        if (policies.size() < 2) continue;
        auto ctrl = controllability(m, policies);
        if (!ctrl.degenerate && ctrl.C > spec.min_controllability) return m;
    }
}

}  // namespace minmax
