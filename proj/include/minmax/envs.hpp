#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "minmax/mdp.hpp"

namespace minmax {

/// Four-state chain walk, stochasticity p. State 0 is the start, 1 the
/// unsafe absorbing state, 2 the corridor, 3 the safe absorbing state.
///
///   s0: action 0 reaches s2 w.p. 1-p and s1 w.p. p; action 1 swaps them.
///   s2: both actions reach s3 w.p. 1-p, self-loop w.p. p.
///
/// Every transition leaving an internal state pays -1 (entering a goal
/// included); absorbing self-loops pay 0. The analysis layers substitute
/// the reward on entry into s1, so its tabulated -1 is the task default.
struct ChainWalkSpec {
    double p = 0.0;
};

inline TabularMdp build_chain_walk(const ChainWalkSpec& spec) {
    double p = spec.p;
    if (p < 0.0 || p > 1.0) throw ValidationError("chain-walk p must lie in [0,1]");
    TabularMdp m = make_mdp(4, 2);
    const int s0 = 0, s1 = 1, s2 = 2, s3 = 3;
    m.p_ref(s0, 0, s2) = 1.0 - p;
    m.p_ref(s0, 0, s1) = p;
    m.p_ref(s0, 1, s2) = p;
    m.p_ref(s0, 1, s1) = 1.0 - p;
    for (int a = 0; a < 2; ++a) {
        m.p_ref(s2, a, s3) = 1.0 - p;
        m.p_ref(s2, a, s2) = p;
        m.p_ref(s1, a, s1) = 1.0;
        m.p_ref(s3, a, s3) = 1.0;
        m.r_ref(s0, a, s1) = -1.0;
        m.r_ref(s0, a, s2) = -1.0;
        m.r_ref(s2, a, s2) = -1.0;
        m.r_ref(s2, a, s3) = -1.0;
        m.r_ref(s1, a, s1) = 0.0;
        m.r_ref(s3, a, s3) = 0.0;
    }
    m.goals = {s1, s3};
    m.unsafe_goals = {s1};
    m.initial_state = s0;
    validate(m);
    return m;
}

inline TabularMdp build_chain_walk(double p) { return build_chain_walk(ChainWalkSpec{p}); }

/// Rectangular map: 'S' start, 'G' goal, 'L' lava, '#' wall, '.' floor.
struct GridSpec {
    std::vector<std::string> layout;
    double slip_prob = 0.0;
    double step_reward = -0.1;
    double goal_reward = 1.0;
    double lava_entry_reward = 0.0;  // overridden online by the learner
};

/// The default 5x5 lava gridworld: start adjacent to the lava, a wall
/// segment forcing a detour to the goal.
inline std::vector<std::string> default_lava_layout() {
    return {
        "G...#",
        "...#.",
        ".#...",
        ".L...",
        ".S...",
    };
}

inline std::vector<std::string> load_grid_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open map file " + path);
    std::vector<std::string> rows;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) rows.push_back(line);
    }
    if (rows.empty()) throw ParseError("map file " + path + " is empty");
    return rows;
}

/**
 * Builds the lava gridworld. Floor and start cells become internal states;
 * all 'G' cells collapse into one absorbing goal state and all 'L' cells
 * into one absorbing lava state. Four actions (up, down, left, right); with
 * probability slip_prob the commanded action is overridden by a uniformly
 * random action (the commanded one included), so the commanded direction
 * executes with probability 1 - sp + sp/4. Moves into walls or off-grid
 * stay in place and still pay the step reward.
 */
inline TabularMdp build_gridworld(const GridSpec& spec) {
    const auto& g = spec.layout;
    if (g.empty()) throw ValidationError("grid layout is empty");
    int rows = static_cast<int>(g.size());
    int cols = static_cast<int>(g[0].size());
    if (cols == 0) throw ValidationError("grid layout has an empty row");
    if (spec.slip_prob < 0.0 || spec.slip_prob > 1.0)
        throw ValidationError("slip probability must lie in [0,1]");

    int n_start = 0, n_goal_cells = 0, n_lava_cells = 0;
    for (int r = 0; r < rows; ++r) {
        if (static_cast<int>(g[r].size()) != cols)
            throw ValidationError("grid layout is not rectangular at row " +
                                  std::to_string(r));
        for (char c : g[r]) {
            switch (c) {
                case 'S': ++n_start; break;
                case 'G': ++n_goal_cells; break;
                case 'L': ++n_lava_cells; break;
                case '#':
                case '.': break;
                default:
                    throw ValidationError(std::string("unknown map character '") + c + "'");
            }
        }
    }
    if (n_start != 1) throw ValidationError("grid needs exactly one 'S'");
    if (n_goal_cells < 1) throw ValidationError("grid needs >= 1 'G'");
    if (n_lava_cells < 1) throw ValidationError("grid needs >= 1 'L'");

    // internal state per floor/start cell, then goal state, then lava state
    std::vector<int> cell_state(static_cast<std::size_t>(rows) * cols, -1);
    int n_internal = 0;
    int start_state = -1;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            char ch = g[r][c];
            if (ch == '.' || ch == 'S') {
                cell_state[static_cast<std::size_t>(r) * cols + c] = n_internal;
                if (ch == 'S') start_state = n_internal;
                ++n_internal;
            }
        }
    const int goal_state = n_internal;
    const int lava_state = n_internal + 1;

    TabularMdp m = make_mdp(n_internal + 2, 4);
    const int dr[4] = {-1, 1, 0, 0};  // up, down, left, right
    const int dc[4] = {0, 0, -1, 1};
    double sp = spec.slip_prob;

    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            int s = cell_state[static_cast<std::size_t>(r) * cols + c];
            if (s < 0) continue;
            for (int a = 0; a < 4; ++a) {
                for (int d = 0; d < 4; ++d) {
                    double pr = sp / 4.0 + (d == a ? 1.0 - sp : 0.0);
                    if (pr <= 0.0) continue;
                    int r2 = r + dr[d], c2 = c + dc[d];
                    int dest;
                    double rw;
                    if (r2 < 0 || r2 >= rows || c2 < 0 || c2 >= cols ||
                        g[r2][c2] == '#') {
                        dest = s;  // bump: stay in place
                        rw = spec.step_reward;
                    } else if (g[r2][c2] == 'G') {
                        dest = goal_state;
                        rw = spec.goal_reward;
                    } else if (g[r2][c2] == 'L') {
                        dest = lava_state;
                        rw = spec.lava_entry_reward;
                    } else {
                        dest = cell_state[static_cast<std::size_t>(r2) * cols + c2];
                        rw = spec.step_reward;
                    }
                    m.p_ref(s, a, dest) += pr;
                    m.r_ref(s, a, dest) = rw;
                }
            }
        }
    for (int a = 0; a < 4; ++a) {
        m.p_ref(goal_state, a, goal_state) = 1.0;
        m.p_ref(lava_state, a, lava_state) = 1.0;
    }
    m.goals = {goal_state, lava_state};
    m.unsafe_goals = {lava_state};
    m.initial_state = start_state;
    validate(m);
    return m;
}

}  // namespace minmax
