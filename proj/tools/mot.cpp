// mot: command line front end for the solver, the data pipeline and the
// evaluation battery.
//
// Exit codes: 0 success, 2 usage, 3 data, 4 backend, 5 internal.

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mot/config.hpp"
#include "mot/data.hpp"
#include "mot/entail.hpp"
#include "mot/error_analysis.hpp"
#include "mot/eval.hpp"
#include "mot/io.hpp"
#include "mot/llm_client.hpp"
#include "mot/logic.hpp"
#include "mot/pipeline.hpp"
#include "mot/rationale.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct globals {
    std::uint64_t seed = 42;
    std::size_t jobs = 8;
    std::string config;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* jobs_opt = nullptr;
    mot::run_config cfg;
};

// Value from the command line when given, else from the config file.
template <class T>
T pick(const CLI::Option* opt, const T& cli, const T& from_config) {
    return opt && opt->count() > 0 ? cli : from_config;
}

template <class T>
std::optional<T> pick(const CLI::Option* opt, const T& cli, const std::optional<T>& from_config) {
    if (opt && opt->count() > 0) return cli;
    return from_config;
}

template <class T>
T require(const std::optional<T>& v, const std::string& what) {
    if (!v) throw mot::usage_error("missing " + what + " (flag or config)");
    return *v;
}

void require_file(const fs::path& p) {
    if (!fs::exists(p)) throw mot::io_error("no such file: " + p.string());
}

ordered_json input_checksums(const std::vector<std::pair<std::string, fs::path>>& files) {
    ordered_json j = ordered_json::object();
    for (const auto& [name, path] : files)
        if (!path.empty() && fs::is_regular_file(path)) j[name] = {{"path", path.string()}, {"checksum", mot::file_checksum(path)}};
    return j;
}

std::string fixed(double v, int digits = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

fs::path stub_table_of(const mot::backend_spec& s) { return s.type == mot::backend_spec::kind::stub ? fs::path(s.stub_path) : fs::path(); }

mot::retry_policy retry_of(const mot::run_config& c) {
    mot::retry_policy r;
    r.max_attempts = c.retries;
    r.initial_delay = std::chrono::milliseconds(c.backoff_ms);
    return r;
}

// ---------------------------------------------------------------------------
// solve / ground

void cmd_solve(const fs::path& file, std::size_t cap, bool dump) {
    using namespace mot::entail;
    auto th = mot::logic::parse_theory(mot::read_text_file(file));
    auto g = ground(th, cap);
    solve_limits limits;
    limits.var_cap = cap;
    auto r = solve_truth_table(g, limits);
    auto opt = verdict_to_option(r.outcome);
    std::cout << to_string(r.outcome) << " (" << mot::to_string(opt.option) << ")\n";
    if (opt.warning) std::cout << "warning: the premises admit no assignment\n";
    std::cout << "variables: " << r.vars_count << "  surviving rows: " << r.surviving_count
              << "  satisfying rows: " << r.satisfying_count << "\n";
    std::cout << "nodes visited: " << r.stats.nodes_visited << "  pruned partial rows: " << r.stats.pruned_partial_count
              << "\n";
    if (!dump) return;
    for (const auto& v : g.vars) std::cout << v.label << '\t';
    std::cout << "conclusion\n";
    for (const auto& row : r.sample_rows) {
        for (std::size_t i = 0; i < row.size(); ++i) std::cout << (row[i] ? 'T' : 'F') << '\t';
        std::cout << (eval_formula(g.conclusion, row) ? 'T' : 'F') << '\n';
    }
    if (r.surviving_count > r.sample_rows.size())
        std::cout << "... " << (r.surviving_count - r.sample_rows.size()) << " more rows\n";
}

void cmd_ground(const fs::path& file, std::size_t cap) {
    using namespace mot::entail;
    auto th = mot::logic::parse_theory(mot::read_text_file(file));
    auto g = ground(th, cap);
    std::cout << "variables (" << g.vars.size() << "):\n";
    for (const auto& v : g.vars) std::cout << "  " << v.id << ' ' << v.label << '\n';
    std::cout << "premises (" << g.premises.size() << "):\n";
    for (const auto& p : g.premises) std::cout << "  " << format_expr(p, g.vars) << '\n';
    std::cout << "conclusion:\n  " << format_expr(g.conclusion, g.vars) << '\n';
}

// ---------------------------------------------------------------------------
// validate

struct validate_args {
    std::string problems, dataset, trace, modality = "nl", gold, fewshot;
};

void cmd_validate(const validate_args& a) {
    if (a.problems.empty() && a.dataset.empty() && a.trace.empty() && a.fewshot.empty())
        throw mot::usage_error("validate needs --problems, --dataset, --trace or --fewshot");
    if (!a.problems.empty()) {
        auto problems = mot::load_problems(a.problems);
        std::size_t checked = 0, mismatches = 0;
        for (const auto& p : problems) {
            if (!p.theory_file) continue;
            auto th = mot::logic::parse_theory(mot::read_text_file(*p.theory_file));
            auto r = mot::entail::solve_truth_table(mot::entail::ground(th));
            auto got = mot::entail::verdict_to_option(r.outcome).option;
            ++checked;
            if (got != p.gold) {
                ++mismatches;
                std::cout << p.id << ": theory gives " << mot::to_string(got) << ", label is "
                          << mot::to_string(p.gold) << '\n';
            }
        }
        std::cout << a.problems << ": " << problems.size() << " problems, " << checked
                  << " theories checked, " << mismatches << " mismatches\n";
        if (mismatches) throw mot::data_error("label mismatch against formalized theories");
    }
    if (!a.dataset.empty()) {
        auto ds = mot::import_round(a.dataset);
        std::cout << a.dataset << ": round " << ds.round << ", " << ds.examples.size() << " examples "
                  << mot::counts_json(ds.counts).dump() << ", checksum ok\n";
    }
    if (!a.trace.empty()) {
        auto m = mot::parse_modality(a.modality);
        auto tr = mot::extract_trace(mot::read_text_file(a.trace), m, fs::path(a.trace).stem().string());
        ordered_json j;
        j["valid"] = tr.valid;
        j["answer"] = mot::to_string(tr.predicted);
        if (!a.gold.empty()) {
            auto gold = mot::label_to_answer(a.gold);
            if (!gold) throw mot::usage_error("unknown gold label '" + a.gold + "'");
            auto r = mot::reward(tr, *gold);
            j["reward"] = r.value;
            j["reason"] = mot::to_string(r.reason);
        }
        std::cout << j.dump() << '\n';
    }
    if (!a.fewshot.empty()) {
        auto sets = mot::load_fewshot_dir(a.fewshot);
        for (const auto& [m, set] : sets)
            std::cout << mot::to_string(m) << ": " << set.examples.size() << " exemplars ok\n";
    }
}

// ---------------------------------------------------------------------------
// evolve

struct evolve_args {
    std::string problems, backend, fewshot, out, hook, model;
    int rounds = 2, samples = 10;
    bool accumulate = false, no_fewshot = false;
    CLI::Option *problems_opt{}, *backend_opt{}, *fewshot_opt{}, *out_opt{}, *hook_opt{}, *model_opt{}, *rounds_opt{},
        *samples_opt{}, *accumulate_opt{};
};

void cmd_evolve(const evolve_args& a, const globals& g) {
    const auto& c = g.cfg;
    fs::path problems = require(pick<fs::path>(a.problems_opt, a.problems, c.problems), "--problems");
    auto spec_text = require(pick<std::string>(a.backend_opt, a.backend, c.generator), "--backend");
    auto fewshot = pick<fs::path>(a.fewshot_opt, a.fewshot, c.fewshot_dir);
    require_file(problems);

    mot::round_config rc;
    rc.seed = g.seed;
    rc.jobs = g.jobs;
    rc.rounds = pick(a.rounds_opt, a.rounds, c.rounds);
    rc.samples = pick(a.samples_opt, a.samples, c.samples);
    rc.temperature = c.evolve_temperature;
    rc.max_tokens = c.evolve_max_tokens;
    rc.fewshot_round1 = c.fewshot_round1 && !a.no_fewshot;
    rc.accumulate = a.accumulate_opt && a.accumulate_opt->count() ? a.accumulate : c.accumulate;
    rc.trainer_hook = pick<std::string>(a.hook_opt, a.hook, c.trainer_hook);
    rc.model = pick(a.model_opt, a.model, c.evolve_model);
    rc.out_dir = pick<fs::path>(a.out_opt, a.out, c.out_dir);
    if (fewshot && rc.fewshot_round1) rc.fewshot = mot::load_fewshot_dir(*fewshot);

    auto spec = mot::backend_spec::parse(spec_text, c.api_key_env);
    std::vector<std::pair<std::string, fs::path>> inputs{{"problems", problems}, {"stub_table", stub_table_of(spec)}};
    if (fewshot && rc.fewshot_round1)
        for (auto m : mot::all_modalities) inputs.push_back({"fewshot_" + mot::to_string(m), *fewshot / (mot::to_string(m) + ".jsonl")});
    rc.header["inputs"] = input_checksums(inputs);
    if (g.cfg.source) rc.header["config"] = mot::file_checksum(*g.cfg.source);

    auto backend = mot::make_backend(spec, retry_of(c));
    auto results = mot::evolve(rc, mot::load_problems(problems), *backend);
    for (const auto& r : results) {
        std::cout << "round " << r.round << ": " << r.dataset.examples.size() << " examples "
                  << mot::counts_json(r.dataset.counts).dump() << " -> " << r.dataset_path.string();
        if (r.next_model) std::cout << " (next model " << *r.next_model << ")";
        std::cout << '\n';
    }
}

// ---------------------------------------------------------------------------
// infer

struct infer_args {
    std::string problems, backend, mode, out, traces_out, model;
    CLI::Option *problems_opt{}, *backend_opt{}, *mode_opt{}, *model_opt{}, *out_opt{};
};

void cmd_infer(const infer_args& a, const globals& g) {
    const auto& c = g.cfg;
    fs::path problems = require(pick<fs::path>(a.problems_opt, a.problems, c.problems), "--problems");
    auto spec_text = require(pick<std::string>(a.backend_opt, a.backend, c.infer_backend ? c.infer_backend : c.generator),
                             "--backend");
    auto mode_text = pick(a.mode_opt, a.mode, c.infer_mode);
    require_file(problems);
    auto mode = mot::infer_mode::parse(mode_text);
    auto spec = mot::backend_spec::parse(spec_text, c.api_key_env);

    mot::infer_config ic;
    ic.seed = g.seed;
    ic.jobs = g.jobs;
    ic.temperature = c.infer_temperature;
    ic.max_tokens = c.infer_max_tokens;
    ic.model = pick(a.model_opt, a.model, c.infer_model);

    auto backend = mot::make_backend(spec, retry_of(c));
    std::vector<mot::sampled_trace> traces;
    auto log = mot::run_inference(mot::load_problems(problems), *backend, mode, ic, &traces);

    ordered_json header;
    header["seed"] = g.seed;
    header["mode"] = mode_text;
    header["model"] = ic.model;
    header["inputs"] = input_checksums({{"problems", problems}, {"stub_table", stub_table_of(spec)}});
    fs::path out = a.out_opt && a.out_opt->count() ? fs::path(a.out) : c.out_dir / "predictions.jsonl";
    mot::write_text_file(out, mot::render_prediction_log(log, header));
    if (!a.traces_out.empty()) {
        mot::jsonl_writer w("inference_traces", header);
        for (const auto& t : traces) w.add(mot::to_json(t));
        w.write(a.traces_out);
    }
    for (const auto& m : log.modalities()) std::cout << m << " accuracy " << fixed(mot::accuracy(log, m), 2) << '\n';
    std::cout << "predictions -> " << out.string() << '\n';
}

// ---------------------------------------------------------------------------
// eval

std::vector<std::size_t> parse_ks(const std::string& text) {
    std::vector<std::size_t> ks;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        try {
            std::size_t used = 0;
            long long v = std::stoll(item, &used);
            if (used != item.size() || v <= 0) throw std::invalid_argument("k");
            ks.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw mot::usage_error("budgets must be positive integers, got '" + item + "'");
        }
    }
    if (ks.empty()) throw mot::usage_error("no budgets given");
    return ks;
}

std::vector<mot::depth_bucket> parse_buckets(const std::string& text) {
    std::vector<mot::depth_bucket> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        auto dash = item.find('-');
        try {
            mot::depth_bucket b;
            b.lo = std::stoi(item.substr(0, dash));
            b.hi = dash == std::string::npos ? b.lo
                   : dash + 1 == item.size() ? std::numeric_limits<int>::max()
                                             : std::stoi(item.substr(dash + 1));
            if (b.lo < 0 || b.hi < b.lo) throw std::invalid_argument("range");
            out.push_back(b);
        } catch (const std::exception&) {
            throw mot::usage_error("bad depth bucket '" + item + "' (use lo-hi, lo- or d)");
        }
    }
    return out;
}

std::string bucket_name(const mot::depth_bucket& b) {
    if (b.hi == std::numeric_limits<int>::max()) return std::to_string(b.lo) + "+";
    if (b.lo == b.hi) return std::to_string(b.lo);
    return std::to_string(b.lo) + "-" + std::to_string(b.hi);
}

struct eval_args {
    std::string log, modality, problems, ks = "1,3,6,9", mode = "pass", out, buckets = "0-2,3-4,5-";
    long long n = -1, c = -1, k = -1;
    std::size_t runs = 50;
    bool pool = false;
    CLI::Option *runs_opt{}, *mode_opt{}, *pool_opt{}, *problems_opt{}, *ks_opt{};
};

void cmd_eval_accuracy(const eval_args& a) {
    auto log = mot::load_prediction_log(a.log);
    std::vector<std::string> mods;
    if (!a.modality.empty()) mods.push_back(a.modality);
    else {
        auto present = log.modalities();
        mods.assign(present.begin(), present.end());
    }
    for (const auto& m : mods) std::cout << m << ' ' << fixed(mot::accuracy(log, m), 2) << '\n';
}

void cmd_eval_passk(const eval_args& a) {
    if (a.log.empty()) {
        if (a.n < 0 || a.c < 0 || a.k < 0) throw mot::usage_error("passk needs --n --c --k or --log --modality --k");
        std::cout << fixed(mot::pass_at_k(a.n, a.c, a.k)) << '\n';
        return;
    }
    if (a.modality.empty() || a.k < 0) throw mot::usage_error("passk over a log needs --modality and --k");
    auto log = mot::load_prediction_log(a.log);
    auto pids = log.problems(a.modality);
    if (pids.empty()) throw mot::empty_selection("no " + a.modality + " predictions");
    double sum = 0;
    for (const auto& pid : pids) {
        const auto& pl = *log.find(pid, a.modality);
        long long c = 0;
        for (const auto& r : pl) c += r.correct ? 1 : 0;
        sum += mot::pass_at_k(static_cast<long long>(pl.size()), c, a.k);
    }
    std::cout << fixed(sum / static_cast<double>(pids.size())) << '\n';
}

void cmd_eval_budget(const eval_args& a, const globals& g) {
    auto log = mot::load_prediction_log(a.log);
    auto runs = pick(a.runs_opt, a.runs, static_cast<std::size_t>(g.cfg.eval_runs));
    auto mode_text = pick(a.mode_opt, a.mode, g.cfg.eval_budget_mode);
    mot::budget_mode mode;
    if (mode_text == "pass") mode = mot::budget_mode::pass;
    else if (mode_text == "vote") mode = mot::budget_mode::vote;
    else throw mot::usage_error("budget mode must be pass or vote");
    if (a.modality.empty()) throw mot::usage_error("budget needs --modality (nl, code, truth_table or mot)");

    std::vector<mot::budget_point> points;
    for (auto k : parse_ks(pick(a.ks_opt, a.ks, g.cfg.eval_ks))) {
        if (a.modality == "mot") points.push_back(mot::mot_budget_eval(log, k, runs, g.seed, mode));
        else points.push_back(mot::sot_budget_eval(log, mot::to_string(mot::parse_modality(a.modality)), k, runs, g.seed, mode));
    }
    ordered_json header;
    header["tool"] = mot::tool_name;
    header["version"] = mot::tool_version;
    header["kind"] = "budget_curve";
    header["seed"] = g.seed;
    header["modality"] = a.modality;
    header["mode"] = mode_text;
    header["runs"] = runs;
    header["band"] = "population stddev";
    header["inputs"] = input_checksums({{"log", a.log}});
    auto text = mot::render_curve(points, header);
    if (a.out.empty()) std::cout << text;
    else mot::write_text_file(a.out, text);
}

void cmd_eval_overlap(const eval_args& a, const globals& g) {
    auto log = mot::load_prediction_log(a.log);
    bool pool = a.pool_opt && a.pool_opt->count() ? a.pool : g.cfg.eval_overlap == "pool";
    auto s = mot::compute_overlap(log, pool ? mot::solved_by::any_in_pool : mot::solved_by::first_sample);
    std::cout << mot::to_json(s).dump(2) << '\n';
}

void cmd_eval_depth(const eval_args& a, const globals& g) {
    auto log = mot::load_prediction_log(a.log);
    fs::path problems_path = require(pick<fs::path>(a.problems_opt, a.problems, g.cfg.problems), "--problems");
    std::map<std::string, mot::problem> problems;
    for (auto& p : mot::load_problems(problems_path)) problems.emplace(p.id, p);
    if (a.modality.empty()) throw mot::usage_error("depth needs --modality");
    auto rows = mot::depth_stratified(log, a.modality, problems, parse_buckets(a.buckets));
    std::cout << "depth problems accuracy\n";
    for (const auto& r : rows) std::cout << bucket_name(r.bucket) << ' ' << r.problems << ' ' << fixed(r.accuracy, 2) << '\n';
}

// ---------------------------------------------------------------------------
// errors

struct errors_args {
    std::string log, traces, problems, judge, out, model;
    CLI::Option *problems_opt{}, *judge_opt{};
};

void cmd_errors(const errors_args& a, const globals& g) {
    auto log = mot::load_prediction_log(a.log);
    fs::path problems_path = require(pick<fs::path>(a.problems_opt, a.problems, g.cfg.problems), "--problems");
    auto judge_text = require(pick<std::string>(a.judge_opt, a.judge, g.cfg.judge), "--judge");
    std::map<std::string, mot::problem> problems;
    for (auto& p : mot::load_problems(problems_path)) problems.emplace(p.id, p);

    std::map<std::string, mot::trace> nl_traces;
    mot::for_each_jsonl(a.traces, [&](std::size_t line, const nlohmann::json& j) {
        try {
            if (j.at("modality").get<std::string>() != "nl" || j.value("sample_index", 0) != 0) return;
            auto tr = mot::trace_from_json(j);
            nl_traces.emplace(tr.problem_id, std::move(tr));
        } catch (const nlohmann::json::exception&) {
            throw mot::schema_error(a.traces, line, "trace rows need problem_id, modality, raw_text, valid");
        }
    });

    std::vector<std::pair<const mot::problem*, const mot::trace*>> failed;
    std::size_t skipped = 0;
    for (const auto& pid : log.problems("nl")) {
        if (log.find(pid, "nl")->front().correct) continue;
        auto p = problems.find(pid);
        if (p == problems.end()) throw mot::data_error("problem " + pid + " is not in " + problems_path.string());
        auto t = nl_traces.find(pid);
        if (t == nl_traces.end()) throw mot::missing_modality(pid, "nl");
        if (!t->second.rationale) {
            ++skipped;
            continue;
        }
        failed.push_back({&p->second, &t->second});
    }

    auto spec = mot::backend_spec::parse(judge_text, g.cfg.api_key_env);
    auto judge = mot::make_backend(spec, retry_of(g.cfg));
    mot::judge_options opt;
    opt.model = a.model;
    std::vector<mot::error_verdict> verdicts(failed.size());
    mot::parallel_for_each(failed.size(), g.jobs, [&](std::size_t i) {
        verdicts[i] = mot::judge_rationale(*failed[i].first, *failed[i].second, *judge, opt);
    });

    ordered_json header;
    header["seed"] = g.seed;
    header["judge"] = judge->describe();
    header["inputs"] = input_checksums(
        {{"log", a.log}, {"traces", a.traces}, {"problems", problems_path}, {"stub_table", stub_table_of(spec)}});
    mot::jsonl_writer w("error_verdicts", header);
    for (const auto& v : verdicts) w.add(mot::to_json(v));
    fs::path out = a.out.empty() ? g.cfg.out_dir / "verdicts.jsonl" : fs::path(a.out);
    w.write(out);

    auto d = mot::aggregate_distribution(verdicts);
    std::cout << "failed NL cases judged: " << d.cases;
    if (skipped) std::cout << " (" << skipped << " without a rationale skipped)";
    std::cout << '\n';
    for (auto c : mot::all_error_categories)
        std::cout << mot::to_string(c) << ' ' << fixed(d.percent(c), 1) << '\n';
    std::cout << "verdicts -> " << out.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mot: mixture-of-thought reasoning toolkit"};
    app.require_subcommand(1);
    globals g;
    g.seed_opt = app.add_option("--seed", g.seed, "Global seed (default 42)");
    g.jobs_opt = app.add_option("--jobs", g.jobs, "Parallel backend requests")->check(CLI::PositiveNumber);
    app.add_option("--config", g.config, "INI config file")->check(CLI::ExistingFile);

    std::string theory_file;
    std::size_t cap = mot::entail::solve_limits{}.var_cap;
    bool dump = false;
    auto* solve = app.add_subcommand("solve", "Decide a theory file by truth-table entailment");
    solve->add_option("theory", theory_file, "Theory file")->required();
    solve->add_option("--cap", cap, "Maximum number of ground variables");
    solve->add_flag("--dump-table", dump, "Print surviving rows (capped)");

    auto* groundc = app.add_subcommand("ground", "Print the grounded propositional theory");
    groundc->add_option("theory", theory_file, "Theory file")->required();
    groundc->add_option("--cap", cap, "Maximum number of ground variables");

    validate_args va;
    auto* validate = app.add_subcommand("validate", "Check problems, round datasets, traces or few-shot sets");
    validate->add_option("--problems", va.problems, "Problem JSONL");
    validate->add_option("--dataset", va.dataset, "Round dataset JSONL");
    validate->add_option("--trace", va.trace, "Raw trace text file");
    validate->add_option("--modality", va.modality, "Trace modality");
    validate->add_option("--gold", va.gold, "Gold label for the trace (True/False/Uncertain or A/B/C)");
    validate->add_option("--fewshot", va.fewshot, "Few-shot directory");

    evolve_args ea;
    auto* evolvec = app.add_subcommand("evolve", "Run self-evolving data rounds");
    ea.problems_opt = evolvec->add_option("--problems", ea.problems, "Problem JSONL");
    ea.backend_opt = evolvec->add_option("--backend", ea.backend, "stub:PATH or remote:MODEL@URL");
    ea.fewshot_opt = evolvec->add_option("--fewshot", ea.fewshot, "Few-shot directory for round 1");
    ea.out_opt = evolvec->add_option("--out", ea.out, "Output directory");
    ea.rounds_opt = evolvec->add_option("--rounds", ea.rounds, "Number of rounds")->check(CLI::PositiveNumber);
    ea.samples_opt = evolvec->add_option("--samples", ea.samples, "Samples per problem and modality")->check(CLI::PositiveNumber);
    ea.hook_opt = evolvec->add_option("--trainer-hook", ea.hook, "Command run after each round");
    ea.model_opt = evolvec->add_option("--model", ea.model, "Round-1 model name");
    ea.accumulate_opt = evolvec->add_flag("--accumulate", ea.accumulate, "Re-mix earlier rounds' examples");
    evolvec->add_flag("--no-fewshot", ea.no_fewshot, "Zero-shot round 1");

    infer_args ia;
    auto* infer = app.add_subcommand("infer", "Answer problems and write a prediction log");
    ia.problems_opt = infer->add_option("--problems", ia.problems, "Problem JSONL");
    ia.backend_opt = infer->add_option("--backend", ia.backend, "stub:PATH or remote:MODEL@URL");
    ia.mode_opt = infer->add_option("--mode", ia.mode, "mot, sot:<modality>[@k] or sc:<modality>@k");
    ia.model_opt = infer->add_option("--model", ia.model, "Model name");
    ia.out_opt = infer->add_option("--out", ia.out, "Prediction log path");
    infer->add_option("--traces-out", ia.traces_out, "Also write the generated traces");

    eval_args va2;
    auto* eval = app.add_subcommand("eval", "Evaluation battery");
    eval->require_subcommand(1);
    auto* acc = eval->add_subcommand("accuracy", "First-sample accuracy per modality");
    acc->add_option("--log", va2.log, "Prediction log")->required();
    acc->add_option("--modality", va2.modality, "Modality column (default: all)");
    auto* passk = eval->add_subcommand("passk", "Unbiased pass@k");
    passk->add_option("--n", va2.n, "Samples");
    passk->add_option("--c", va2.c, "Correct samples");
    passk->add_option("--k", va2.k, "Budget");
    passk->add_option("--log", va2.log, "Prediction log (averages over problems)");
    passk->add_option("--modality", va2.modality, "Modality column");
    auto* budget = eval->add_subcommand("budget", "Budgeted sampling curve (k mean stddev)");
    budget->add_option("--log", va2.log, "Prediction log")->required();
    budget->add_option("--modality", va2.modality, "nl, code, truth_table or mot");
    va2.ks_opt = budget->add_option("--k", va2.ks, "Comma-separated budgets");
    va2.runs_opt = budget->add_option("--runs", va2.runs, "Repetitions per budget")->check(CLI::PositiveNumber);
    va2.mode_opt = budget->add_option("--mode", va2.mode, "pass or vote");
    budget->add_option("--out", va2.out, "Curve file (default stdout)");
    auto* overlap = eval->add_subcommand("overlap", "Coverage overlap across modalities");
    overlap->add_option("--log", va2.log, "Prediction log")->required();
    va2.pool_opt = overlap->add_flag("--pool", va2.pool, "Count a problem solved when any pooled sample is correct");
    auto* depth = eval->add_subcommand("depth", "Depth-stratified accuracy");
    depth->add_option("--log", va2.log, "Prediction log")->required();
    va2.problems_opt = depth->add_option("--problems", va2.problems, "Problem JSONL with depth");
    depth->add_option("--modality", va2.modality, "Modality column")->required();
    depth->add_option("--buckets", va2.buckets, "Depth ranges, e.g. 0-2,3-4,5-");

    errors_args ra;
    auto* errors = app.add_subcommand("errors", "Judge failed NL rationales and tally error types");
    errors->add_option("--log", ra.log, "Prediction log")->required();
    errors->add_option("--traces", ra.traces, "Trace JSONL (from infer --traces-out or a round)")->required();
    ra.problems_opt = errors->add_option("--problems", ra.problems, "Problem JSONL");
    ra.judge_opt = errors->add_option("--judge", ra.judge, "Judge backend");
    errors->add_option("--model", ra.model, "Judge model name");
    errors->add_option("--out", ra.out, "Verdict JSONL");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return static_cast<int>(mot::error_family::usage);
    }

    try {
        if (!g.config.empty()) g.cfg = mot::load_config(g.config);
        g.seed = pick(g.seed_opt, g.seed, g.cfg.seed);
        g.jobs = pick(g.jobs_opt, g.jobs, g.cfg.jobs);

        if (*solve) cmd_solve(theory_file, cap, dump);
        else if (*groundc) cmd_ground(theory_file, cap);
        else if (*validate) cmd_validate(va);
        else if (*evolvec) cmd_evolve(ea, g);
        else if (*infer) cmd_infer(ia, g);
        else if (*acc) cmd_eval_accuracy(va2);
        else if (*passk) cmd_eval_passk(va2);
        else if (*budget) cmd_eval_budget(va2, g);
        else if (*overlap) cmd_eval_overlap(va2, g);
        else if (*depth) cmd_eval_depth(va2, g);
        else if (*errors) cmd_errors(ra, g);
        return 0;
    } catch (const mot::error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return static_cast<int>(mot::error_family::internal);
    }
}
