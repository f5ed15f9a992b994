#pragma once

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "minmax/envs.hpp"
#include "minmax/learner.hpp"

namespace minmax {

/// Worker-pool width: MINMAX_THREADS when set, hardware concurrency otherwise.
inline int worker_count() {
    if (const char* env = std::getenv("MINMAX_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

/// Runs f(0..n-1) on the worker pool. Results slots are per-index, so
/// scheduling order never affects output.
template <typename F>
inline void parallel_for(std::size_t n, F&& f) {
    std::size_t workers = static_cast<std::size_t>(worker_count());
    if (workers > n) workers = n;
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            while (true) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

/// Converged metrics of one training run: failure rate over the last
/// `tail` episodes (unsafe or step-cap terminations), mean task return over
/// the same window, environment steps until the greedy policy stabilized,
/// and the final penalty.
struct RunMetrics {
    double failure_rate = 0.0;
    double mean_return = 0.0;
    double steps_to_convergence = 0.0;
    double final_penalty = 0.0;
    bool converged = false;
};

inline RunMetrics summarize(const TrainResult& tr, int tail = 1'000) {
    RunMetrics rm;
    int n = static_cast<int>(tr.logs.size());
    int from = std::max(0, n - tail);
    int count = n - from;
    int failures = 0;
    double ret = 0.0;
    for (int i = from; i < n; ++i) {
        if (tr.logs[i].terminal != TerminalKind::safe_goal) ++failures;
        ret += tr.logs[i].total_return;
    }
    rm.failure_rate = count > 0 ? static_cast<double>(failures) / count : 0.0;
    rm.mean_return = count > 0 ? ret / count : 0.0;
    rm.steps_to_convergence = static_cast<double>(tr.steps_to_convergence);
    rm.final_penalty = tr.logs.empty() ? 0.0 : tr.logs.back().penalty;
    rm.converged = tr.convergence_episode >= 0;
    return rm;
}

enum class SweepKind { penalty, slip };

struct SweepRow {
    std::string label;      // numeric setting, or "adaptive" for the learned arm
    double setting = 0.0;   // NaN for the adaptive arm
    bool adaptive = false;
    double failure_mean = 0.0;
    double failure_stderr = 0.0;
    double return_mean = 0.0;
    double steps_mean = 0.0;
    double penalty_mean = 0.0;
};

struct PerSeedRecord {
    std::string label;
    std::uint64_t seed = 0;
    RunMetrics metrics;
};

struct SweepResult {
    SweepKind kind = SweepKind::penalty;
    std::vector<SweepRow> rows;
    std::vector<PerSeedRecord> raw;
    std::uint64_t base_seed = 0;
    int n_seeds = 0;
};

inline const char* variable_name(SweepKind k) {
    return k == SweepKind::penalty ? "penalty" : "slip";
}

/**
 * Fans (setting x seed) training runs out to the worker pool and reduces
 * them in a fixed order, so thread count never changes output bytes.
 *
 * penalty kind: one fixed-penalty arm per setting plus one adaptive
 * (learned-penalty) arm, all on the map's own slip probability. slip kind:
 * one adaptive arm per slip setting. Seeds are base_seed + 0..n_seeds-1,
 * shared across arms.
 */
inline SweepResult grid_sweep(const GridSpec& base, SweepKind kind,
                              const std::vector<double>& settings, int n_seeds,
                              std::uint64_t base_seed, LearnerConfig cfg) {
    if (n_seeds < 1) throw std::invalid_argument("seeds must be >= 1");
    check_config(cfg);

    struct Arm {
        std::string label;
        double setting;
        bool adaptive;
        TabularMdp mdp;
    };
    std::vector<Arm> arms;
    if (kind == SweepKind::penalty) {
        TabularMdp env = build_gridworld(base);
        for (double pen : settings)
            arms.push_back({detail::fmt(pen), pen, false, env});
        arms.push_back(
            {"adaptive", std::numeric_limits<double>::quiet_NaN(), true, env});
    } else {
        for (double sp : settings) {
            GridSpec spec = base;
            spec.slip_prob = sp;
            arms.push_back({detail::fmt(sp), sp, true, build_gridworld(spec)});
        }
    }

    std::size_t n_jobs = arms.size() * static_cast<std::size_t>(n_seeds);
    std::vector<RunMetrics> slots(n_jobs);
    parallel_for(n_jobs, [&](std::size_t i) {
        std::size_t arm_i = i / n_seeds;
        int seed_i = static_cast<int>(i % n_seeds);
        LearnerConfig run_cfg = cfg;
        run_cfg.seed = base_seed + seed_i;
        const Arm& arm = arms[arm_i];
        TrainResult tr = arm.adaptive
                             ? run_training(arm.mdp, run_cfg)
                             : run_fixed_penalty(arm.mdp, arm.setting, run_cfg);
        slots[i] = summarize(tr);
    });

    SweepResult out;
    out.kind = kind;
    out.base_seed = base_seed;
    out.n_seeds = n_seeds;
    for (std::size_t arm_i = 0; arm_i < arms.size(); ++arm_i) {
        SweepRow row;
        row.label = arms[arm_i].label;
        row.setting = arms[arm_i].setting;
        row.adaptive = arms[arm_i].adaptive;
        std::vector<double> fails;
        for (int j = 0; j < n_seeds; ++j) {
            const RunMetrics& rm = slots[arm_i * n_seeds + j];
            out.raw.push_back({row.label, base_seed + static_cast<std::uint64_t>(j), rm});
            row.failure_mean += rm.failure_rate;
            row.return_mean += rm.mean_return;
            row.steps_mean += rm.steps_to_convergence;
            row.penalty_mean += rm.final_penalty;
            fails.push_back(rm.failure_rate);
        }
        row.failure_mean /= n_seeds;
        row.return_mean /= n_seeds;
        row.steps_mean /= n_seeds;
        row.penalty_mean /= n_seeds;
        if (n_seeds > 1) {
            double ss = 0.0;
            for (double f : fails) ss += (f - row.failure_mean) * (f - row.failure_mean);
            row.failure_stderr = std::sqrt(ss / (n_seeds - 1)) / std::sqrt(n_seeds);
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

inline void write_sweep_header(const SweepResult& r, std::ostream& out) {
    out << "# variable=" << variable_name(r.kind) << " base_seed=" << r.base_seed
        << " seeds=" << r.base_seed << ".." << r.base_seed + r.n_seeds - 1 << "\n";
}

/// Wide per-setting table. Penalty sweeps and slip sweeps expose different
/// trailing columns, matching the documented schemas.
inline void write_sweep_csv(const SweepResult& r, std::ostream& out) {
    write_sweep_header(r, out);
    if (r.kind == SweepKind::penalty) {
        out << "penalty,failure_rate,failure_stderr,mean_return,steps_to_convergence\n";
        for (const auto& row : r.rows)
            out << row.label << ',' << detail::fmt(row.failure_mean) << ','
                << detail::fmt(row.failure_stderr) << ',' << detail::fmt(row.return_mean)
                << ',' << detail::fmt(row.steps_mean) << '\n';
    } else {
        out << "slip,failure_rate,failure_stderr,mean_return,final_penalty\n";
        for (const auto& row : r.rows)
            out << row.label << ',' << detail::fmt(row.failure_mean) << ','
                << detail::fmt(row.failure_stderr) << ',' << detail::fmt(row.return_mean)
                << ',' << detail::fmt(row.penalty_mean) << '\n';
    }
}

/// One row per (setting, seed); feeds statistical re-analysis without
/// re-running anything.
inline void write_raw_csv(const SweepResult& r, std::ostream& out) {
    write_sweep_header(r, out);
    out << "setting,seed,failure_rate,mean_return,steps_to_convergence,final_penalty\n";
    for (const auto& rec : r.raw)
        out << rec.label << ',' << rec.seed << ',' << detail::fmt(rec.metrics.failure_rate)
            << ',' << detail::fmt(rec.metrics.mean_return) << ','
            << detail::fmt(rec.metrics.steps_to_convergence) << ','
            << detail::fmt(rec.metrics.final_penalty) << '\n';
}

inline void to_json(nlohmann::json& j, const RunMetrics& m) {
    j = {{"failure_rate", m.failure_rate},
         {"mean_return", m.mean_return},
         {"steps_to_convergence", m.steps_to_convergence},
         {"final_penalty", m.final_penalty},
         {"converged", m.converged}};
}

inline void from_json(const nlohmann::json& j, RunMetrics& m) {
    j.at("failure_rate").get_to(m.failure_rate);
    j.at("mean_return").get_to(m.mean_return);
    j.at("steps_to_convergence").get_to(m.steps_to_convergence);
    j.at("final_penalty").get_to(m.final_penalty);
    j.at("converged").get_to(m.converged);
}

inline void to_json(nlohmann::json& j, const SweepResult& r) {
    j["variable"] = variable_name(r.kind);
    j["base_seed"] = r.base_seed;
    j["n_seeds"] = r.n_seeds;
    auto rows = nlohmann::json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"label", row.label},
                        {"adaptive", row.adaptive},
                        {"failure_rate", row.failure_mean},
                        {"failure_stderr", row.failure_stderr},
                        {"mean_return", row.return_mean},
                        {"steps_to_convergence", row.steps_mean},
                        {"final_penalty", row.penalty_mean}});
    j["rows"] = std::move(rows);
    auto raw = nlohmann::json::array();
    for (const auto& rec : r.raw)
        raw.push_back({{"setting", rec.label}, {"seed", rec.seed}, {"metrics", rec.metrics}});
    j["raw"] = std::move(raw);
}

inline void from_json(const nlohmann::json& j, SweepResult& r) {
    std::string variable = j.at("variable").get<std::string>();
    r.kind = variable == "penalty" ? SweepKind::penalty : SweepKind::slip;
    j.at("base_seed").get_to(r.base_seed);
    j.at("n_seeds").get_to(r.n_seeds);
    r.rows.clear();
    for (const auto& row : j.at("rows")) {
        SweepRow s;
        s.label = row.at("label").get<std::string>();
        s.adaptive = row.at("adaptive").get<bool>();
        s.setting = s.adaptive ? std::numeric_limits<double>::quiet_NaN()
                               : std::stod(s.label);
        s.failure_mean = row.at("failure_rate").get<double>();
        s.failure_stderr = row.at("failure_stderr").get<double>();
        s.return_mean = row.at("mean_return").get<double>();
        s.steps_mean = row.at("steps_to_convergence").get<double>();
        s.penalty_mean = row.at("final_penalty").get<double>();
        r.rows.push_back(std::move(s));
    }
    r.raw.clear();
    for (const auto& rec : j.at("raw")) {
        PerSeedRecord p;
        p.label = rec.at("setting").get<std::string>();
        p.seed = rec.at("seed").get<std::uint64_t>();
        rec.at("metrics").get_to(p.metrics);
        r.raw.push_back(std::move(p));
    }
}

}  // namespace minmax
