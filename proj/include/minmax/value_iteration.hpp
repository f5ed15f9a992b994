#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "minmax/mdp.hpp"

namespace minmax {

/// Value iteration hit the sweep cap before the residual dropped below
/// tolerance, which signals a divergent (improper-optimal) configuration.
struct ViDivergenceError : std::runtime_error {
    double last_residual;
    explicit ViDivergenceError(double residual)
        : std::runtime_error("value iteration did not converge; last residual = " +
                             detail::fmt(residual)),
          last_residual(residual) {}
};

struct ViOptions {
    double tol = 1e-10;
    long max_sweeps = 1'000'000;
};

struct ViResult {
    DetPolicy policy;            // greedy, lowest action index on ties
    std::vector<double> values;  // 0 at absorbing states
    long sweeps = 0;
};

/**
 * Undiscounted SSP optimal control with the unsafe-entry rewards replaced:
 * every transition into an unsafe goal pays `unsafe_reward` instead of its
 * tabulated reward. Values start at zero and synchronous sweeps run until
 * the max-norm change drops below tol.
 */
inline ViResult value_iteration(const TabularMdp& m, double unsafe_reward,
                                const ViOptions& opt = {}) {
    auto internal = m.internal_states();
    auto unsafe = m.unsafe_mask();
    std::vector<double> v(m.num_states, 0.0), v_next(m.num_states, 0.0);

    auto q_value = [&](int s, int a, const std::vector<double>& vals) {
        double q = 0.0;
        for (int s2 = 0; s2 < m.num_states; ++s2) {
            double pr = m.p(s, a, s2);
            if (pr <= 0.0) continue;
            double rw = unsafe[s2] ? unsafe_reward : m.r(s, a, s2);
            q += pr * (rw + vals[s2]);
        }
        return q;
    };

    ViResult res;
    double residual = 0.0;
    for (long sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
        residual = 0.0;
        for (int s : internal) {
            double best = q_value(s, 0, v);
            for (int a = 1; a < m.num_actions; ++a) best = std::max(best, q_value(s, a, v));
            residual = std::max(residual, std::abs(best - v[s]));
            v_next[s] = best;
        }
        v.swap(v_next);
        res.sweeps = sweep;
        if (residual < opt.tol) {
            res.values = v;
            res.policy.action_of.assign(m.num_states, -1);
            for (int s : internal) {
                int best_a = 0;
                double best_q = q_value(s, 0, v);
                for (int a = 1; a < m.num_actions; ++a) {
                    double q = q_value(s, a, v);
                    if (q > best_q) {
                        best_q = q;
                        best_a = a;
                    }
                }
                res.policy.action_of[s] = best_a;
            }
            return res;
        }
    }
    throw ViDivergenceError(residual);
}

}  // namespace minmax
