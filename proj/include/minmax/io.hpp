#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "minmax/mdp.hpp"

namespace minmax {

/// Serializes to the interchange format: sparse [s, a, s', value] quadruples
/// for both tensors, zero entries omitted. Goal self-loops are omitted too;
/// read_mdp restores them. One quadruple per line, doubles at round-trip
/// precision.
inline std::string write_mdp(const TabularMdp& m) {
    auto entries = [&](bool probs) {
        std::string out;
        bool first = true;
        for (int s = 0; s < m.num_states; ++s) {
            bool goal = m.is_goal(s);
            for (int a = 0; a < m.num_actions; ++a)
                for (int s2 = 0; s2 < m.num_states; ++s2) {
                    if (goal && s2 == s) continue;  // auto-completed on read
                    double v = probs ? m.p(s, a, s2) : m.r(s, a, s2);
                    if (v == 0.0) continue;
                    out += first ? "\n    " : ",\n    ";
                    first = false;
                    out += "[" + std::to_string(s) + ", " + std::to_string(a) + ", " +
                           std::to_string(s2) + ", " + detail::fmt(v) + "]";
                }
        }
        return out.empty() ? std::string("[]") : "[" + out + "\n  ]";
    };
    auto states = [](const std::vector<int>& v) {
        std::string out = "[";
        for (std::size_t i = 0; i < v.size(); ++i)
            out += (i ? ", " : "") + std::to_string(v[i]);
        return out + "]";
    };
    std::string doc = "{\n";
    doc += "  \"num_states\": " + std::to_string(m.num_states) + ",\n";
    doc += "  \"num_actions\": " + std::to_string(m.num_actions) + ",\n";
    doc += "  \"transition\": " + entries(true) + ",\n";
    doc += "  \"reward\": " + entries(false) + ",\n";
    doc += "  \"goals\": " + states(m.goals) + ",\n";
    doc += "  \"unsafe_goals\": " + states(m.unsafe_goals) + ",\n";
    doc += "  \"initial_state\": " + std::to_string(m.initial_state) + "\n";
    doc += "}\n";
    return doc;
}

namespace detail {

inline int require_index(const nlohmann::json& v, int limit, const std::string& where) {
    if (!v.is_number_integer())
        throw ParseError(where + ": expected an integer index, got " + v.dump());
    int idx = v.get<int>();
    if (idx < 0 || idx >= limit)
        throw ParseError(where + ": index " + std::to_string(idx) + " out of range [0," +
                         std::to_string(limit) + ")");
    return idx;
}

inline const nlohmann::json& require_field(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(std::string("missing field '") + key + "'");
    return *it;
}

}  // namespace detail

/// Parses the interchange format. Throws ParseError with the offending
/// field/entry; structural problems surface as ValidationError after parse.
inline TabularMdp read_mdp(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed document: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("top-level value must be an object");

    const auto& jn = detail::require_field(j, "num_states");
    const auto& ja = detail::require_field(j, "num_actions");
    if (!jn.is_number_integer() || !ja.is_number_integer())
        throw ParseError("num_states and num_actions must be integers");
    int S = jn.get<int>(), A = ja.get<int>();
    if (S < 1 || A < 1) throw ParseError("num_states and num_actions must be positive");

    TabularMdp m = make_mdp(S, A);

    auto read_entries = [&](const char* key, bool is_prob) {
        const auto& arr = detail::require_field(j, key);
        if (!arr.is_array()) throw ParseError(std::string(key) + " must be a list");
        std::vector<std::uint8_t> seen(is_prob ? m.transition.size() : 0, 0);
        int i = 0;
        for (const auto& e : arr) {
            std::string where = std::string(key) + "[" + std::to_string(i) + "]";
            if (!e.is_array() || e.size() != 4)
                throw ParseError(where + ": expected [s, a, s', value]");
            int s = detail::require_index(e[0], S, where);
            int a = detail::require_index(e[1], A, where);
            int s2 = detail::require_index(e[2], S, where);
            if (!e[3].is_number()) throw ParseError(where + ": value must be a number");
            double v = e[3].get<double>();
            if (is_prob) {
                if (v < 0.0 || v > 1.0)
                    throw ParseError(where + ": probability " + detail::fmt(v) +
                                     " out of [0,1]");
                std::size_t flat = (static_cast<std::size_t>(s) * A + a) * S + s2;
                if (seen[flat]) throw ParseError(where + ": duplicate transition entry");
                seen[flat] = 1;
                m.p_ref(s, a, s2) = v;
            } else {
                m.r_ref(s, a, s2) = v;
            }
            ++i;
        }
    };
    read_entries("transition", true);
    read_entries("reward", false);

    auto read_states = [&](const char* key) {
        const auto& arr = detail::require_field(j, key);
        if (!arr.is_array()) throw ParseError(std::string(key) + " must be a list");
        std::vector<int> out;
        int i = 0;
        for (const auto& e : arr) {
            out.push_back(
                detail::require_index(e, S, std::string(key) + "[" + std::to_string(i) + "]"));
            ++i;
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    m.goals = read_states("goals");
    m.unsafe_goals = read_states("unsafe_goals");
    m.initial_state = detail::require_index(detail::require_field(j, "initial_state"), S,
                                            "initial_state");

    // declared goal states may omit their absorbing self-loop
    for (int g : m.goals)
        for (int a = 0; a < A; ++a) {
            bool empty = true;
            for (int s2 = 0; s2 < S && empty; ++s2)
                if (m.p(g, a, s2) != 0.0) empty = false;
            if (empty) m.p_ref(g, a, g) = 1.0;
        }

    validate(m);
    return m;
}

inline TabularMdp read_mdp_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return read_mdp(text);
}

inline void write_mdp_file(const TabularMdp& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << write_mdp(m);
}

}  // namespace minmax
