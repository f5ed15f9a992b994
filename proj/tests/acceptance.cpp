// Acceptance suite: runs each numbered criterion and prints one PASS/FAIL
// line for it. Invoke with a criterion number to run just that one; the
// exit code is the number of failed criteria.

#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "minmax/analysis.hpp"
#include "minmax/envs.hpp"
#include "minmax/learner.hpp"
#include "minmax/random_mdp.hpp"
#include "minmax/sweep.hpp"
#include "minmax/value_iteration.hpp"
#include "test_support.hpp"

using namespace minmax;
using testsupport::chain_policy;

namespace {

struct Check {
    bool ok = true;
    std::vector<std::string> notes;

    void expect(bool cond, const std::string& what) {
        if (!cond) ok = false;
        notes.push_back(std::string(cond ? "    ok    " : "    FAILED") + "  " + what);
    }
    void note(const std::string& what) { notes.push_back("          " + what); }
};

std::string num(double v) { return detail::fmt(v); }

// 1. chain-walk exact analysis: C, D and the Minmax penalty at p=0 and p=0.25
Check criterion1() {
    Check c;
    SafetyAnalysis a0 = minmax_penalty(build_chain_walk(0.0));
    c.expect(std::abs(a0.controllability - 1.0) <= 1e-9, "p=0: C = 1, got " + num(a0.controllability));
    c.expect(std::abs(a0.diameter - 2.0) <= 1e-9, "p=0: D = 2, got " + num(a0.diameter));
    c.expect(std::abs(a0.minmax_penalty - -2.0) <= 1e-9,
             "p=0: penalty = -2, got " + num(a0.minmax_penalty));
    SafetyAnalysis a25 = minmax_penalty(build_chain_walk(0.25));
    c.expect(std::abs(a25.controllability - 0.5) <= 1e-9,
             "p=0.25: C = 0.5, got " + num(a25.controllability));
    c.expect(std::abs(a25.diameter - 2.0) <= 1e-9, "p=0.25: D = 2, got " + num(a25.diameter));
    c.expect(std::abs(a25.minmax_penalty - -4.0) <= 1e-9,
             "p=0.25: penalty = -4, got " + num(a25.minmax_penalty));
    return c;
}

// 2. |dP_s0(pi1, pi2)| = |1 - 2p| and dP_s2 = 0
Check criterion2() {
    Check c;
    for (double p : {0.0, 0.1, 0.25, 0.4}) {
        TabularMdp m = build_chain_walk(p);
        PolicyEval e1 = evaluate_policy(m, chain_policy(0));
        PolicyEval e2 = evaluate_policy(m, chain_policy(1));
        double dp0 = std::abs(e1.safe_prob[0] - e2.safe_prob[0]);
        double dp2 = std::abs(e1.safe_prob[2] - e2.safe_prob[2]);
        c.expect(std::abs(dp0 - std::abs(1.0 - 2.0 * p)) <= 1e-9,
                 "p=" + num(p) + ": |dP(s0)| = " + num(dp0) + " vs |1-2p| = " +
                     num(std::abs(1.0 - 2.0 * p)));
        c.expect(dp2 <= 1e-9, "p=" + num(p) + ": dP(s2) = " + num(dp2));
    }
    return c;
}

// 3. p=0.5 and p=1 are uncontrollable and the CLI says so with exit code 3
Check criterion3() {
    Check c;
    for (double p : {0.5, 1.0}) {
        TabularMdp m = build_chain_walk(p);
        auto policies = enumerate_proper_policies(m);
        auto ctrl = controllability(m, policies);
        c.expect(ctrl.C < 1e-9, "p=" + num(p) + ": C = " + num(ctrl.C));
        auto res = testsupport::run_command(std::string(MINMAX_CLI_PATH) +
                                            " analyze --p " + num(p));
        c.expect(res.exit_code == 3, "p=" + num(p) + ": analyze exit code " +
                                         std::to_string(res.exit_code) + " (want 3)");
        c.expect(res.output.find("uncontrollable") != std::string::npos,
                 "p=" + num(p) + ": analyze diagnostic mentions 'uncontrollable'");
    }
    return c;
}

// 4. VI under the Minmax penalty is optimally safe; some shallow penalty is not
Check criterion4() {
    Check c;
    for (double p : {0.0, 0.1, 0.25}) {
        TabularMdp m = build_chain_walk(p);
        SafetyAnalysis a = minmax_penalty(m);
        auto evals = evaluate_all(m, a.proper_policies);
        double best = optimal_safe_prob(m, a.proper_policies, evals)[m.initial_state];

        auto fail_at = [&](double pen) {
            auto vi = value_iteration(m, pen);
            return 1.0 - evaluate_policy(m, vi.policy).safe_prob[m.initial_state];
        };
        double fail_minmax = fail_at(a.minmax_penalty);
        c.expect(std::abs(fail_minmax - (1.0 - best)) <= 1e-9,
                 "p=" + num(p) + ": failure at Minmax penalty = " + num(fail_minmax) +
                     " vs 1 - optimal = " + num(1.0 - best));
        bool some_worse = false;
        for (double pen : {-1.0, -0.5, 0.0})
            if (fail_at(pen) > fail_minmax + 1e-12) some_worse = true;
        c.expect(some_worse, "p=" + num(p) + ": a penalty in {-1,-0.5,0} fails more often");
    }
    return c;
}

// 5. safety direction of the bound on 100 random controllable MDPs
Check criterion5() {
    Check c;
    int bad = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        TabularMdp m = random_controllable_mdp(seed);
        SafetyAnalysis a = minmax_penalty(m);
        auto vi = value_iteration(m, a.minmax_penalty - 0.01);
        PolicyEval ev = evaluate_policy(m, vi.policy);
        auto evals = evaluate_all(m, a.proper_policies);
        auto best = optimal_safe_prob(m, a.proper_policies, evals);
        for (int s = 0; s < m.num_states; ++s)
            if (!m.is_goal(s) && std::abs(ev.safe_prob[s] - best[s]) > 1e-9) {
                ++bad;
                c.note("seed " + std::to_string(seed) + " state " + std::to_string(s) +
                       ": safe_prob " + num(ev.safe_prob[s]) + " vs optimal " +
                       num(best[s]));
                break;
            }
    }
    c.expect(bad == 0, "zero counterexamples on 100 seeded MDPs, got " +
                           std::to_string(bad));
    return c;
}

// 6. a penalty 0.01 above the Minmax value is strictly unsafe on the chain walk
Check criterion6() {
    Check c;
    for (double p : {0.0, 0.1, 0.25}) {
        TabularMdp m = build_chain_walk(p);
        SafetyAnalysis a = minmax_penalty(m);
        auto evals = evaluate_all(m, a.proper_policies);
        double best = optimal_safe_prob(m, a.proper_policies, evals)[m.initial_state];
        auto vi = value_iteration(m, a.minmax_penalty + 0.01);
        double got = evaluate_policy(m, vi.policy).safe_prob[m.initial_state];
        c.expect(got < best - 1e-12, "p=" + num(p) + ": safe_prob(s0) = " + num(got) +
                                         " strictly below optimal " + num(best) +
                                         " at penalty " + num(a.minmax_penalty + 0.01));
    }
    return c;
}

// 7. VI optimal values match brute-force policy enumeration on 100 random MDPs
Check criterion7() {
    Check c;
    int bad = 0;
    for (std::uint64_t seed = 101; seed <= 200; ++seed) {
        TabularMdp m = random_controllable_mdp(seed);
        const double unsafe_reward = -0.5;
        TabularMdp modified = m;
        for (int s = 0; s < m.num_states; ++s)
            if (!m.is_goal(s))
                for (int a = 0; a < m.num_actions; ++a)
                    for (int g : m.unsafe_goals) modified.r_ref(s, a, g) = unsafe_reward;
        auto vi = value_iteration(m, unsafe_reward);
        auto policies = enumerate_proper_policies(modified);
        std::vector<double> best(m.num_states, -std::numeric_limits<double>::infinity());
        for (const auto& pi : policies) {
            PolicyEval ev = evaluate_policy(modified, pi);
            for (int s = 0; s < m.num_states; ++s)
                if (!m.is_goal(s)) best[s] = std::max(best[s], ev.value[s]);
        }
        for (int s = 0; s < m.num_states; ++s)
            if (!m.is_goal(s) && std::abs(vi.values[s] - best[s]) > 1e-8) {
                ++bad;
                c.note("seed " + std::to_string(seed) + " state " + std::to_string(s) +
                       ": V* " + num(vi.values[s]) + " vs enumerated " + num(best[s]));
                break;
            }
    }
    c.expect(bad == 0,
             "VI matches enumeration on 100 seeded MDPs, got " + std::to_string(bad) +
                 " mismatches");
    return c;
}

// 8. gridworld learning at sp=0: adaptive failure < 2%, fixed-0 at least
//    10 points worse
Check criterion8() {
    Check c;
    GridSpec spec;
    spec.layout = default_lava_layout();
    spec.slip_prob = 0.0;
    LearnerConfig cfg;  // paper defaults: eps 0.1, alpha 0.1, 10k episodes
    SweepResult r = grid_sweep(spec, SweepKind::penalty, {0.0}, 70, 1000, cfg);
    const SweepRow& fixed0 = r.rows[0];
    const SweepRow& adaptive = r.rows[1];
    c.note("adaptive converged failure rate = " + num(adaptive.failure_mean) +
           " (stderr " + num(adaptive.failure_stderr) + ")");
    c.note("fixed-0 converged failure rate  = " + num(fixed0.failure_mean) + " (stderr " +
           num(fixed0.failure_stderr) + ")");
    c.expect(adaptive.failure_mean < 0.02,
             "adaptive failure rate " + num(adaptive.failure_mean) + " < 0.02");
    c.expect(fixed0.failure_mean >= adaptive.failure_mean + 0.10,
             "fixed-0 failure rate exceeds adaptive by >= 10 points (gap = " +
                 num(fixed0.failure_mean - adaptive.failure_mean) + ")");
    return c;
}

// 9. seed-averaged final |penalty| non-decreasing in the slip probability
Check criterion9() {
    Check c;
    GridSpec spec;
    spec.layout = default_lava_layout();
    LearnerConfig cfg;
    SweepResult r = grid_sweep(spec, SweepKind::slip, {0.0, 0.25, 0.5}, 70, 2000, cfg);
    double prev = -1.0;
    for (const auto& row : r.rows) {
        double mag = std::abs(row.penalty_mean);
        c.note("sp=" + row.label + ": mean final penalty = " + num(row.penalty_mean));
        c.expect(mag >= prev - 1e-12,
                 "sp=" + row.label + ": |penalty| " + num(mag) + " >= previous " + num(prev));
        prev = mag;
    }
    return c;
}

// 10. estimator invariants on a suite of runs; identical seeds, identical logs
Check criterion10() {
    Check c;
    struct RunSpec {
        std::string name;
        TabularMdp mdp;
        std::uint64_t seed;
    };
    std::vector<RunSpec> runs;
    GridSpec grid;
    grid.layout = default_lava_layout();
    for (double sp : {0.0, 0.25})
        for (std::uint64_t seed : {0ULL, 1ULL}) {
            grid.slip_prob = sp;
            runs.push_back({"grid sp=" + num(sp), build_gridworld(grid), seed});
        }
    for (double p : {0.0, 0.25})
        runs.push_back({"chain p=" + num(p), build_chain_walk(p), 0});

    for (const auto& run : runs) {
        LearnerConfig cfg;
        cfg.episodes = 2000;
        cfg.seed = run.seed;
        bool monotone = true, formula = true, substituted = true;
        double prev = 0.0;
        MinmaxEstimate refold;
        TrainResult tr = run_training(run.mdp, cfg, [&](const StepRecord& rec) {
            if (rec.estimate.penalty > prev) monotone = false;
            prev = rec.estimate.penalty;
            if (rec.estimate.penalty !=
                std::min(rec.estimate.r_min_obs, rec.estimate.v_min - rec.estimate.v_max))
                formula = false;
            refold = update_estimate(refold, rec.r_env, rec.v_of_s);
            if (refold.penalty != rec.estimate.penalty) formula = false;
            if (run.mdp.is_unsafe(rec.s2) && rec.r_used != rec.estimate.penalty)
                substituted = false;
        });
        std::string tag = run.name + " seed " + std::to_string(run.seed);
        c.expect(monotone, tag + ": penalty trace monotone non-increasing");
        c.expect(formula, tag + ": penalty = min(r_min_obs, v_min - v_max) every step");
        c.expect(substituted, tag + ": unsafe-entry Q updates use the current penalty");

        TrainResult again = run_training(run.mdp, cfg);
        std::ostringstream log_a, log_b;
        write_episode_csv(tr.logs, log_a);
        write_episode_csv(again.logs, log_b);
        c.expect(log_a.str() == log_b.str(), tag + ": identical seeds, identical logs");
    }
    return c;
}

struct Criterion {
    int id;
    const char* title;
    std::function<Check()> run;
};

const std::vector<Criterion> kCriteria = {
    {1, "chain-walk exact analysis (C, D, Minmax penalty)", criterion1},
    {2, "dP closed form |1-2p|", criterion2},
    {3, "controllability zeros at p=0.5 and p=1", criterion3},
    {4, "optimal failure probability under the Minmax penalty", criterion4},
    {5, "penalties below the bound are optimally safe (100 random MDPs)", criterion5},
    {6, "penalties above the bound are strictly unsafe (chain walk)", criterion6},
    {7, "value iteration vs policy enumeration (100 random MDPs)", criterion7},
    {8, "gridworld learning at sp=0 (adaptive vs fixed-0)", criterion8},
    {9, "learned |penalty| non-decreasing in slip probability", criterion9},
    {10, "estimator invariants and run determinism", criterion10},
};

}  // namespace

int main(int argc, char** argv) {
    int only = argc > 1 ? std::atoi(argv[1]) : 0;
    int failures = 0;
    for (const auto& crit : kCriteria) {
        if (only != 0 && crit.id != only) continue;
        Check c = crit.run();
        std::cout << (c.ok ? "[PASS]" : "[FAIL]") << " criterion " << crit.id << ": "
                  << crit.title << "\n";
        for (const auto& line : c.notes) std::cout << line << "\n";
        if (!c.ok) ++failures;
    }
    return failures;
}
