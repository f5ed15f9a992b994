// Command-line harness: exact safety analysis of tabular SSP MDPs plus the
// gridworld learning sweeps. See README.md for the exit-code contract.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "minmax/analysis.hpp"
#include "minmax/envs.hpp"
#include "minmax/io.hpp"
#include "minmax/learner.hpp"
#include "minmax/sweep.hpp"
#include "minmax/value_iteration.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalidInput = 2;
constexpr int kExitUncontrollable = 3;
constexpr int kExitCapExceeded = 4;

namespace fs = std::filesystem;
using minmax::detail::fmt;

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

struct ChainwalkRow {
    double p;
    std::string label;
    double penalty;
    double failure;
    long sweeps;
};

std::vector<ChainwalkRow> chainwalk_study(const std::vector<double>& ps,
                                          const std::vector<double>& penalties,
                                          std::uint64_t cap) {
    std::vector<ChainwalkRow> rows;
    for (double p : ps) {
        minmax::TabularMdp m = minmax::build_chain_walk(p);
        minmax::SafetyAnalysis a = minmax::minmax_penalty(m, cap);
        double span = a.r_min - a.r_max;
        std::vector<std::pair<std::string, double>> choices;
        for (double pen : penalties) choices.emplace_back("fixed", pen);
        choices.emplace_back("rmin_over_c",
                             std::min(a.r_min, span / a.controllability));
        choices.emplace_back("rmin_times_d", std::min(a.r_min, span * a.diameter));
        choices.emplace_back("minmax", a.minmax_penalty);
        for (const auto& [label, pen] : choices) {
            auto vi = minmax::value_iteration(m, pen);
            auto ev = minmax::evaluate_policy(m, vi.policy);
            rows.push_back(
                {p, label, pen, 1.0 - ev.safe_prob[m.initial_state], vi.sweeps});
        }
    }
    return rows;
}

std::string chainwalk_csv(const std::vector<ChainwalkRow>& rows) {
    std::string out = "p,label,penalty,failure_prob,vi_sweeps\n";
    for (const auto& r : rows)
        out += fmt(r.p) + "," + r.label + "," + fmt(r.penalty) + "," + fmt(r.failure) +
               "," + std::to_string(r.sweeps) + "\n";
    return out;
}

minmax::GridSpec grid_spec_from(const std::string& map_path, double slip) {
    minmax::GridSpec spec;
    spec.layout = map_path.empty() ? minmax::default_lava_layout()
                                   : minmax::load_grid_file(map_path);
    spec.slip_prob = slip;
    return spec;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact analysis and penalty-learning harness for tabular "
                 "stochastic-shortest-path MDPs"};
    app.require_subcommand(1);

    // analyze
    auto* analyze = app.add_subcommand(
        "analyze", "Controllability, diameter and Minmax penalty of an MDP");
    std::string mdp_file, map_file;
    double chain_p = -1.0;
    double slip = 0.25;
    std::uint64_t policy_cap = 1'000'000;
    std::string variant_name = "pairs-max";
    std::string out_dir;
    analyze->add_option("--mdp", mdp_file, "Serialized MDP file");
    analyze->add_option("--p", chain_p, "Analyze the chain walk with this stochasticity");
    analyze->add_option("--map", map_file, "Analyze a gridworld map file");
    analyze->add_option("--slip", slip, "Slip probability for --map (default 0.25)");
    analyze->add_option("--policy-cap", policy_cap,
                        "Abort if |A|^|internal| exceeds this (default 1e6)");
    analyze
        ->add_option("--controllability-variant", variant_name,
                     "pairs-max (default) or states-min")
        ->check(CLI::IsMember({"pairs-max", "states-min"}));
    analyze->add_option("--out", out_dir, "Directory for analysis.json");

    // chainwalk
    auto* chainwalk = app.add_subcommand(
        "chainwalk", "Penalty study on the chain-walk MDP: optimal-policy failure "
                     "probability per (p, penalty)");
    std::vector<double> p_list{0.0, 0.1, 0.25};
    std::vector<double> penalty_list{0.0, -0.5, -1.0, -1.5, -2.0, -2.5,
                                     -3.0, -3.5, -4.0, -4.5, -5.0};
    std::string cw_out, cw_format = "csv";
    chainwalk->add_option("--p", p_list, "Stochasticity values (default 0 0.1 0.25)");
    chainwalk->add_option("--penalty", penalty_list,
                          "Fixed unsafe rewards to sweep (default 0..-5)");
    chainwalk->add_option("--policy-cap", policy_cap, "Enumeration cap");
    chainwalk->add_option("--out", cw_out, "Directory for the result table");
    chainwalk->add_option("--format", cw_format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));

    // sweep
    auto* sweep = app.add_subcommand(
        "sweep", "Gridworld learning sweeps over penalties or slip probabilities");
    std::string kind_name, sweep_map, sweep_out, sweep_format = "csv", config_file;
    std::vector<double> settings;
    int seeds = 70;
    std::uint64_t base_seed = 0;
    minmax::LearnerConfig cfg;
    sweep->add_option("--kind", kind_name, "penalty or slip")
        ->required()
        ->check(CLI::IsMember({"penalty", "slip"}));
    sweep->add_option("--map", sweep_map, "Map file (default: built-in 5x5 layout)");
    sweep->add_option("--slip", slip, "Base slip probability for penalty sweeps");
    sweep->add_option("--settings", settings, "Sweep values")->required();
    sweep->add_option("--seeds", seeds, "Seeds per setting (default 70)");
    sweep->add_option("--seed", base_seed, "Base seed (default 0)");
    sweep->add_option("--episodes", cfg.episodes, "Episodes per run (default 10000)");
    sweep->add_option("--epsilon", cfg.epsilon, "Exploration rate (default 0.1)");
    sweep->add_option("--alpha", cfg.alpha, "Learning rate (default 0.1)");
    sweep->add_option("--step-cap", cfg.step_cap, "Episode step cap (default 1000)");
    sweep->add_option("--config", config_file, "Learner config file (json)");
    sweep->add_option("--out", sweep_out, "Directory for result tables");
    sweep->add_option("--format", sweep_format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalidInput;
    }

    try {
        if (*analyze) {
            minmax::TabularMdp m;
            if (!mdp_file.empty())
                m = minmax::read_mdp_file(mdp_file);
            else if (chain_p >= 0.0)
                m = minmax::build_chain_walk(chain_p);
            else if (!map_file.empty())
                m = minmax::build_gridworld(grid_spec_from(map_file, slip));
            else
                throw minmax::ParseError("analyze needs --mdp, --p or --map");
            auto variant = variant_name == "states-min"
                               ? minmax::ControllabilityVariant::states_min
                               : minmax::ControllabilityVariant::pairs_max;
            minmax::SafetyAnalysis a = minmax::minmax_penalty(m, policy_cap, variant);
            std::string report = minmax::to_report(a).dump(2) + "\n";
            std::cout << report;
            if (!out_dir.empty()) {
                fs::create_directories(out_dir);
                write_text_file(fs::path(out_dir) / "analysis.json", report);
            }
        } else if (*chainwalk) {
            auto rows = chainwalk_study(p_list, penalty_list, policy_cap);
            std::string csv = chainwalk_csv(rows);
            std::cout << csv;
            if (!cw_out.empty()) {
                fs::create_directories(cw_out);
                if (cw_format == "csv") {
                    write_text_file(fs::path(cw_out) / "chainwalk.csv", csv);
                } else {
                    nlohmann::json j = nlohmann::json::array();
                    for (const auto& r : rows)
                        j.push_back({{"p", r.p},
                                     {"label", r.label},
                                     {"penalty", r.penalty},
                                     {"failure_prob", r.failure},
                                     {"vi_sweeps", r.sweeps}});
                    write_text_file(fs::path(cw_out) / "chainwalk.json", j.dump(2) + "\n");
                }
            }
        } else if (*sweep) {
            if (!config_file.empty()) {
                std::ifstream in(config_file);
                if (!in) throw minmax::ParseError("cannot open " + config_file);
                nlohmann::json j = nlohmann::json::parse(in, nullptr, true, true);
                j.get_to(cfg);
            }
            auto kind = kind_name == "penalty" ? minmax::SweepKind::penalty
                                               : minmax::SweepKind::slip;
            minmax::GridSpec spec = grid_spec_from(sweep_map, slip);
            minmax::SweepResult res =
                minmax::grid_sweep(spec, kind, settings, seeds, base_seed, cfg);
            std::ostringstream wide;
            minmax::write_sweep_csv(res, wide);
            std::cout << wide.str();
            if (!sweep_out.empty()) {
                fs::create_directories(sweep_out);
                std::string stem = std::string("sweep_") + minmax::variable_name(kind);
                if (sweep_format == "csv") {
                    write_text_file(fs::path(sweep_out) / (stem + ".csv"), wide.str());
                    std::ostringstream raw;
                    minmax::write_raw_csv(res, raw);
                    write_text_file(fs::path(sweep_out) / (stem + "_raw.csv"), raw.str());
                } else {
                    nlohmann::json j = res;
                    write_text_file(fs::path(sweep_out) / (stem + ".json"),
                                    j.dump(2) + "\n");
                }
            }
        }
    } catch (const minmax::UncontrollableError& e) {
        std::cerr << "error: " << e.what() << " (C = 0)\n";
        return kExitUncontrollable;
    } catch (const minmax::CapExceededError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCapExceeded;
    } catch (const minmax::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidInput;
    } catch (const minmax::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
