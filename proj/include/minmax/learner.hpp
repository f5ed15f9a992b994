#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "minmax/mdp.hpp"

namespace minmax {

/// Running Minmax-penalty estimate: observed reward bounds, running value
/// bounds, and penalty = min(r_min_obs, v_min - v_max). All fields start at
/// zero; penalty never increases over a run.
struct MinmaxEstimate {
    double r_min_obs = 0.0;
    double r_max_obs = 0.0;
    double v_min = 0.0;
    double v_max = 0.0;
    double penalty = 0.0;
};

/// One estimator step, fed the raw observed reward and the agent's current
/// value estimate of the state it acted from. Pure: the estimate after any
/// run prefix is a fold of this update over that prefix.
inline MinmaxEstimate update_estimate(MinmaxEstimate est, double r_t, double v_of_s_t) {
    if (!std::isfinite(r_t) || !std::isfinite(v_of_s_t))
        throw std::invalid_argument("non-finite estimator input");
    est.r_min_obs = std::min(est.r_min_obs, r_t);
    est.r_max_obs = std::max(est.r_max_obs, r_t);
    est.v_min = std::min({est.v_min, est.r_min_obs, v_of_s_t});
    est.v_max = std::max({est.v_max, est.r_max_obs, v_of_s_t});
    est.penalty = std::min(est.r_min_obs, est.v_min - est.v_max);
    return est;
}

struct LearnerConfig {
    double epsilon = 0.1;
    double alpha = 0.1;
    int episodes = 10'000;
    int step_cap = 1'000;  // cap-terminated episodes count as failures
    std::uint64_t seed = 0;
};

inline void check_config(const LearnerConfig& cfg) {
    if (!(cfg.epsilon > 0.0 && cfg.epsilon <= 1.0))
        throw std::invalid_argument("epsilon must lie in (0,1]");
    if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0))
        throw std::invalid_argument("alpha must lie in (0,1]");
    if (cfg.episodes < 1) throw std::invalid_argument("episodes must be >= 1");
    if (cfg.step_cap < 1) throw std::invalid_argument("step_cap must be >= 1");
}

inline void from_json(const nlohmann::json& j, LearnerConfig& cfg) {
    if (j.contains("epsilon")) cfg.epsilon = j.at("epsilon").get<double>();
    if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
    if (j.contains("episodes")) cfg.episodes = j.at("episodes").get<int>();
    if (j.contains("step_cap")) cfg.step_cap = j.at("step_cap").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
}

inline void to_json(nlohmann::json& j, const LearnerConfig& cfg) {
    j = {{"epsilon", cfg.epsilon},
         {"alpha", cfg.alpha},
         {"episodes", cfg.episodes},
         {"step_cap", cfg.step_cap},
         {"seed", cfg.seed}};
}

enum class TerminalKind { safe_goal, unsafe_goal, step_cap };

inline const char* to_string(TerminalKind k) {
    switch (k) {
        case TerminalKind::safe_goal: return "safe-goal";
        case TerminalKind::unsafe_goal: return "unsafe";
        default: return "step-cap";
    }
}

struct EpisodeLog {
    int episode = 0;
    double total_return = 0.0;  // undiscounted sum of task rewards
    int steps = 0;
    TerminalKind terminal = TerminalKind::step_cap;
    double penalty = 0.0;  // estimate (or fixed value) at episode end
};

/// Zero-initialized tabular action values.
struct QTable {
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> q;

    QTable() = default;
    QTable(int s, int a) : num_states(s), num_actions(a), q(static_cast<std::size_t>(s) * a, 0.0) {}

    double& at(int s, int a) { return q[static_cast<std::size_t>(s) * num_actions + a]; }
    double at(int s, int a) const { return q[static_cast<std::size_t>(s) * num_actions + a]; }

    /// Greedy state value, max_a q(s, a).
    double v(int s) const {
        double best = at(s, 0);
        for (int a = 1; a < num_actions; ++a) best = std::max(best, at(s, a));
        return best;
    }
    /// Greedy action, lowest index on ties.
    int greedy(int s) const {
        int best_a = 0;
        double best = at(s, 0);
        for (int a = 1; a < num_actions; ++a)
            if (at(s, a) > best) {
                best = at(s, a);
                best_a = a;
            }
        return best_a;
    }
    DetPolicy greedy_policy(const TabularMdp& m) const {
        DetPolicy pi;
        pi.action_of.assign(num_states, -1);
        for (int s = 0; s < num_states; ++s)
            if (!m.is_goal(s)) pi.action_of[s] = greedy(s);
        return pi;
    }
};

/// q(s,a) += alpha * (r + max_a' q(s',a') - q(s,a)), with the continuation
/// value defined as 0 when s' is absorbing.
inline void q_learning_step(QTable& q, int s, int a, int s2, double r, double alpha,
                            bool s2_absorbing) {
    double cont = s2_absorbing ? 0.0 : q.v(s2);
    q.at(s, a) += alpha * (r + cont - q.at(s, a));
}

/// Everything a test might want to see about one environment interaction.
struct StepRecord {
    int episode = 0;
    int t = 0;
    int s = 0, a = 0, s2 = 0;
    double r_env = 0.0;   // task reward as observed
    double r_used = 0.0;  // reward fed to the Q update (penalty at unsafe entry)
    double v_of_s = 0.0;
    MinmaxEstimate estimate;  // after this step's update
};

using StepObserver = std::function<void(const StepRecord&)>;

struct TrainResult {
    QTable q;
    MinmaxEstimate estimate;
    std::vector<EpisodeLog> logs;
    long total_steps = 0;
    int convergence_episode = -1;  // -1 when the greedy policy never held 500 episodes
    long steps_to_convergence = 0;  // cumulative env steps through that episode
};

namespace detail {

/// Shared training loop; adaptive penalty when fixed_penalty is empty.
inline TrainResult train(const TabularMdp& m, const LearnerConfig& cfg,
                         std::optional<double> fixed_penalty,
                         const StepObserver& observer) {
    check_config(cfg);
    auto goal = m.goal_mask();
    auto unsafe = m.unsafe_mask();
    Rng rng(cfg.seed);

    TrainResult res;
    res.q = QTable(m.num_states, m.num_actions);
    res.logs.reserve(cfg.episodes);
    if (fixed_penalty) res.estimate.penalty = *fixed_penalty;

    std::vector<int> stable_greedy;  // greedy actions over internal states
    int stable_since = 0;
    std::vector<long> cum_steps;  // cumulative env steps through episode e
    cum_steps.reserve(cfg.episodes);
    constexpr int kStableEpisodes = 500;

    for (int ep = 0; ep < cfg.episodes; ++ep) {
        int s = m.initial_state;
        EpisodeLog log;
        log.episode = ep;
        log.terminal = TerminalKind::step_cap;
        for (int t = 0; t < cfg.step_cap; ++t) {
            int a = rng.next_double() < cfg.epsilon ? rng.next_int(m.num_actions)
                                                    : res.q.greedy(s);
            auto [s2, r_env] = sample_step(m, s, a, rng);
            double v_s = res.q.v(s);
            if (!fixed_penalty) res.estimate = update_estimate(res.estimate, r_env, v_s);
            double r_used = r_env;
            if (unsafe[s2])
                r_used = fixed_penalty ? *fixed_penalty : res.estimate.penalty;
            q_learning_step(res.q, s, a, s2, r_used, cfg.alpha, goal[s2]);
            log.total_return += r_env;
            ++log.steps;
            ++res.total_steps;
            if (observer)
                observer(StepRecord{ep, t, s, a, s2, r_env, r_used, v_s, res.estimate});
            if (goal[s2]) {
                log.terminal =
                    unsafe[s2] ? TerminalKind::unsafe_goal : TerminalKind::safe_goal;
                break;
            }
            s = s2;
        }
        log.penalty = res.estimate.penalty;
        res.logs.push_back(log);

        // convergence metric: first episode after which the greedy policy
        // holds for 500 consecutive episode ends
        cum_steps.push_back(res.total_steps);
        std::vector<int> greedy_now;
        greedy_now.reserve(m.num_states);
        for (int st = 0; st < m.num_states; ++st)
            if (!goal[st]) greedy_now.push_back(res.q.greedy(st));
        if (ep == 0 || greedy_now != stable_greedy) {
            stable_greedy = std::move(greedy_now);
            stable_since = ep;
        }
        if (res.convergence_episode < 0 && ep - stable_since + 1 >= kStableEpisodes) {
            res.convergence_episode = stable_since;
            res.steps_to_convergence = cum_steps[stable_since];
        }
    }
    if (res.convergence_episode < 0) res.steps_to_convergence = res.total_steps;
    return res;
}

}  // namespace detail

/// Q-learning with epsilon-greedy exploration, estimating the Minmax
/// penalty online and substituting it as the reward on every transition
/// into an unsafe goal. Deterministic given cfg.seed.
inline TrainResult run_training(const TabularMdp& m, const LearnerConfig& cfg,
                                const StepObserver& observer = {}) {
    return detail::train(m, cfg, std::nullopt, observer);
}

/// Same loop with a constant hand-set unsafe reward instead of the
/// estimator; the baseline arm of the tradeoff study.
inline TrainResult run_fixed_penalty(const TabularMdp& m, double penalty,
                                     const LearnerConfig& cfg,
                                     const StepObserver& observer = {}) {
    if (!std::isfinite(penalty)) throw std::invalid_argument("non-finite penalty");
    return detail::train(m, cfg, penalty, observer);
}

/// EpisodeLog stream in the documented CSV schema.
inline void write_episode_csv(const std::vector<EpisodeLog>& logs, std::ostream& out) {
    out << "episode,return,steps,terminal,penalty\n";
    char buf[64];
    for (const auto& log : logs) {
        out << log.episode << ',';
        std::snprintf(buf, sizeof buf, "%.17g", log.total_return);
        out << buf << ',' << log.steps << ',' << to_string(log.terminal) << ',';
        std::snprintf(buf, sizeof buf, "%.17g", log.penalty);
        out << buf << '\n';
    }
}

}  // namespace minmax
