#pragma once

// INI run configuration. Relative paths (including stub table paths inside
// backend specs) are resolved against the config file's directory; command
// line flags override whatever the file sets.
//
//   [global]   seed, jobs
//   [paths]    problems, fewshot, out
//   [backend]  generator, judge, api_key_env, retries, backoff_ms
//   [evolve]   rounds, samples, temperature, max_tokens, fewshot_round1,
//              accumulate, trainer_hook, model
//   [infer]    backend (defaults to [backend] generator), mode, temperature,
//              max_tokens, model
//   [eval]     runs, k, mode, overlap

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mot/errors.hpp"
#include "mot/io.hpp"

namespace mot {

struct run_config {
    std::uint64_t seed = 42;
    std::size_t jobs = 8;

    std::optional<std::filesystem::path> problems;
    std::optional<std::filesystem::path> fewshot_dir;
    std::filesystem::path out_dir = "out";

    std::optional<std::string> generator;
    std::optional<std::string> judge;
    std::string api_key_env = "OPENAI_API_KEY";
    int retries = 4;
    int backoff_ms = 500;

    int rounds = 2;
    int samples = 10;
    double evolve_temperature = 1.0;
    int evolve_max_tokens = 2048;
    bool fewshot_round1 = true;
    bool accumulate = false;
    std::optional<std::string> trainer_hook;
    std::string evolve_model;

    std::optional<std::string> infer_backend;
    std::string infer_mode = "mot";
    double infer_temperature = 0.7;
    int infer_max_tokens = 2048;
    std::string infer_model;

    int eval_runs = 50;
    std::string eval_ks = "1,3,6,9";
    std::string eval_budget_mode = "pass";
    std::string eval_overlap = "first";

    std::optional<std::filesystem::path> source;  // the config file itself
};

namespace detail {

inline std::string resolve_backend_path(const std::string& spec, const std::filesystem::path& base) {
    if (spec.rfind("stub:", 0) != 0) return spec;
    std::filesystem::path p = spec.substr(5);
    return "stub:" + (p.is_absolute() ? p : base / p).lexically_normal().string();
}

}  // namespace detail

inline run_config load_config(const std::filesystem::path& path) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(path.string(), tree);
    } catch (const pt::ini_parser_error& e) {
        if (!std::filesystem::exists(path)) throw io_error("cannot open config " + path.string());
        throw schema_error(path.string(), e.line(), e.message());
    }

    static const std::set<std::string> known{"global", "paths", "backend", "evolve", "infer", "eval"};
    for (const auto& [section, body] : tree) {
        if (!known.contains(section))
            throw schema_error(path.string(), 0, "unknown section [" + section + "]");
        (void)body;
    }

    const auto base = std::filesystem::absolute(path).parent_path();
    auto resolve = [&](const std::string& p) { return (base / p).lexically_normal(); };

    run_config c;
    c.source = path;
    try {
        c.seed = tree.get<std::uint64_t>("global.seed", c.seed);
        c.jobs = tree.get<std::size_t>("global.jobs", c.jobs);

        if (auto v = tree.get_optional<std::string>("paths.problems")) c.problems = resolve(*v);
        if (auto v = tree.get_optional<std::string>("paths.fewshot")) c.fewshot_dir = resolve(*v);
        if (auto v = tree.get_optional<std::string>("paths.out")) c.out_dir = resolve(*v);

        if (auto v = tree.get_optional<std::string>("backend.generator"))
            c.generator = detail::resolve_backend_path(*v, base);
        if (auto v = tree.get_optional<std::string>("backend.judge")) c.judge = detail::resolve_backend_path(*v, base);
        c.api_key_env = tree.get("backend.api_key_env", c.api_key_env);
        c.retries = tree.get("backend.retries", c.retries);
        c.backoff_ms = tree.get("backend.backoff_ms", c.backoff_ms);

        c.rounds = tree.get("evolve.rounds", c.rounds);
        c.samples = tree.get("evolve.samples", c.samples);
        c.evolve_temperature = tree.get("evolve.temperature", c.evolve_temperature);
        c.evolve_max_tokens = tree.get("evolve.max_tokens", c.evolve_max_tokens);
        c.fewshot_round1 = tree.get("evolve.fewshot_round1", c.fewshot_round1);
        c.accumulate = tree.get("evolve.accumulate", c.accumulate);
        if (auto v = tree.get_optional<std::string>("evolve.trainer_hook"); v && !v->empty()) c.trainer_hook = *v;
        c.evolve_model = tree.get("evolve.model", c.evolve_model);

        if (auto v = tree.get_optional<std::string>("infer.backend")) c.infer_backend = detail::resolve_backend_path(*v, base);
        c.infer_mode = tree.get("infer.mode", c.infer_mode);
        c.infer_temperature = tree.get("infer.temperature", c.infer_temperature);
        c.infer_max_tokens = tree.get("infer.max_tokens", c.infer_max_tokens);
        c.infer_model = tree.get("infer.model", c.infer_model);

        c.eval_runs = tree.get("eval.runs", c.eval_runs);
        c.eval_ks = tree.get("eval.k", c.eval_ks);
        c.eval_budget_mode = tree.get("eval.mode", c.eval_budget_mode);
        c.eval_overlap = tree.get("eval.overlap", c.eval_overlap);
    } catch (const pt::ptree_bad_data& e) {
        throw schema_error(path.string(), 0, std::string("bad value: ") + e.what());
    }
    return c;
}

}  // namespace mot
