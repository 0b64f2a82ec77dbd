#pragma once

// Shared helpers for the unit and acceptance suites: fixture lookup and
// random generators for formulas and ground theories.

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mot/entail.hpp"
#include "mot/logic.hpp"

namespace mot::testing {

inline std::filesystem::path fixture(const std::string& relative) {
    return std::filesystem::path(MOT_FIXTURES_DIR) / relative;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("mot-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline nlohmann::json read_json(const std::filesystem::path& p) { return nlohmann::json::parse(read_file(p)); }

inline logic::theory load_theory(const std::string& name) {
    return logic::parse_theory(read_file(fixture("theories/" + name)));
}

inline logic::declarations sample_declarations() {
    return {{"a", "b", "c"}, {{"P", 0}, {"Q", 1}, {"R", 2}, {"S", 1}}};
}

// Random closed formula over sample_declarations().
class formula_generator {
public:
    explicit formula_generator(std::uint64_t seed) : rng_(seed) {}

    logic::formula next(int depth = 4) {
        scope_.clear();
        return gen(depth);
    }

private:
    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

    logic::term gen_term() {
        if (!scope_.empty() && pick(2) == 0) return logic::variable(scope_[pick(static_cast<int>(scope_.size()))]);
        return logic::constant(decls_.constants[pick(static_cast<int>(decls_.constants.size()))]);
    }

    logic::formula gen_atom() {
        const auto& p = decls_.predicates[pick(static_cast<int>(decls_.predicates.size()))];
        std::vector<logic::term> args;
        for (int i = 0; i < p.arity; ++i) args.push_back(gen_term());
        return logic::make_atom(p.name, std::move(args));
    }

    logic::formula gen(int depth) {
        if (depth <= 0) return gen_atom();
        switch (pick(8)) {
            case 0: return gen_atom();
            case 1: return logic::make_not(gen(depth - 1));
            case 2: return logic::make_and(gen(depth - 1), gen(depth - 1));
            case 3: return logic::make_or(gen(depth - 1), gen(depth - 1));
            case 4: return logic::make_implies(gen(depth - 1), gen(depth - 1));
            case 5: return logic::make_iff(gen(depth - 1), gen(depth - 1));
            default: {
                static const char* names[] = {"x", "y", "z"};
                std::string v = names[pick(3)];
                scope_.push_back(v);
                auto body = gen(depth - 1);
                scope_.pop_back();
                return pick(2) ? logic::make_forall(v, body) : logic::make_exists(v, body);
            }
        }
    }

    std::mt19937_64 rng_;
    logic::declarations decls_ = sample_declarations();
    std::vector<std::string> scope_;
};

// Random propositional theory with `vars` variables and up to `max_premises` premises.
class ground_theory_generator {
public:
    explicit ground_theory_generator(std::uint64_t seed) : rng_(seed) {}

    entail::ground_theory next(std::size_t max_vars = 12, std::size_t max_premises = 8) {
        entail::ground_theory g;
        std::size_t n = 1 + pick(max_vars);
        for (std::size_t i = 0; i < n; ++i) g.vars.push_back({i, "p" + std::to_string(i)});
        std::size_t m = pick(max_premises + 1);
        for (std::size_t i = 0; i < m; ++i) g.premises.push_back(gen(n, 3));
        g.conclusion = gen(n, 2);
        return g;
    }

    entail::prop_expr gen(std::size_t n, int depth) {
        using entail::prop_expr;
        if (depth <= 0 || pick(4) == 0) return prop_expr::variable(pick(n));
        switch (pick(5)) {
            case 0: return !gen(n, depth - 1);
            case 1: return gen(n, depth - 1) && gen(n, depth - 1);
            case 2: return gen(n, depth - 1) || gen(n, depth - 1);
            case 3: return entail::implies(gen(n, depth - 1), gen(n, depth - 1));
            default: return entail::iff(gen(n, depth - 1), gen(n, depth - 1));
        }
    }

private:
    std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

    std::mt19937_64 rng_;
};

}  // namespace mot::testing
