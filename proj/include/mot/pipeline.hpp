#pragma once

// Self-evolving rounds (sample, filter, mix, export, hand off to a trainer)
// and inference: one answer per modality with majority vote, single
// modality, or self-consistency.

#include <array>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <json.hpp>

#include "mot/data.hpp"
#include "mot/eval.hpp"
#include "mot/io.hpp"
#include "mot/llm_client.hpp"
#include "mot/random.hpp"
#include "mot/rationale.hpp"

namespace mot {

class trainer_hook_failed : public backend_error {
public:
    explicit trainer_hook_failed(const std::string& what) : backend_error("TrainerHookFailed: " + what) {}
};

class no_answer_produced : public data_error {
public:
    explicit no_answer_produced(const std::string& pid)
        : data_error("NoAnswerProduced: no parseable answer for problem " + pid) {}
};

struct round_config {
    int rounds = 2;
    int samples = 10;
    std::uint64_t seed = 42;
    bool fewshot_round1 = true;
    // Shell command; {round}, {dataset} and {model} are substituted. Its last
    // non-empty stdout line names the model for the next round.
    std::optional<std::string> trainer_hook;
    // Round n also re-mixes every earlier round's examples.
    bool accumulate = false;
    double temperature = 1.0;
    int max_tokens = 2048;
    std::size_t jobs = 8;
    std::string model;  // round-1 model; empty means the backend default
    std::map<modality, fewshot_set> fewshot;
    std::filesystem::path out_dir = "out";
    // Extra header fields for every artifact (input checksums and the like).
    nlohmann::ordered_json header;
};

struct round_result {
    int round = 0;
    std::string model;
    round_dataset dataset;
    std::filesystem::path dataset_path;
    std::filesystem::path traces_path;
    std::optional<std::string> next_model;
};

namespace detail {

inline std::string replace_all(std::string s, const std::string& from, const std::string& to) {
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
        s.replace(pos, from.size(), to);
    return s;
}

inline std::string shell_quote(const std::string& s) { return "'" + replace_all(s, "'", "'\\''") + "'"; }

struct task_output {
    std::string prompt;
    std::vector<trace> traces;
    std::optional<std::size_t> kept;
};

inline std::string render_traces(const std::vector<std::optional<task_output>>& outputs,
                                 const std::vector<problem>& problems, const nlohmann::ordered_json& fields) {
    jsonl_writer w("round_traces", fields);
    for (std::size_t t = 0; t < outputs.size(); ++t) {
        if (!outputs[t]) continue;
        const auto& p = problems[t / 3];
        for (std::size_t s = 0; s < outputs[t]->traces.size(); ++s) {
            const auto& tr = outputs[t]->traces[s];
            auto j = to_json(tr);
            j["sample_index"] = s;
            j["reward"] = to_string(reward(tr, p.gold).reason);
            j["kept"] = outputs[t]->kept == s;
            w.add(j);
        }
    }
    return w.str();
}

inline std::string run_trainer_hook(const std::string& tmpl, int round, const std::filesystem::path& dataset,
                                    const std::string& model) {
    auto cmd = replace_all(tmpl, "{round}", std::to_string(round));
    cmd = replace_all(cmd, "{dataset}", shell_quote(dataset.string()));
    cmd = replace_all(cmd, "{model}", shell_quote(model));
    std::FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) throw trainer_hook_failed("cannot start: " + cmd);
    std::string out;
    char buf[4096];
    while (auto n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
    int status = ::pclose(pipe);
    if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0)
        throw trainer_hook_failed("exit status " + std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1) +
                                  " from: " + cmd);
    std::string last;
    std::istringstream lines(out);
    for (std::string line; std::getline(lines, line);) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
        if (!line.empty()) last = line;
    }
    if (last.empty()) throw trainer_hook_failed("no model identifier printed by: " + cmd);
    return last;
}

}  // namespace detail

// One round: for every (problem, modality) sample S texts, keep the first
// passing trace, mix the three modality sets and export. Few-shot exemplars
// are used only in round 1. On backend failure the traces gathered so far
// are written to round_<n>_traces.partial.jsonl before the error propagates.
inline round_result run_round(int n, const round_config& cfg, const std::vector<problem>& problems, backend& b,
                              const std::string& model, std::span<const curated_example> prior = {}) {
    if (n < 1) throw usage_error("round numbers start at 1");
    if (cfg.samples < 1) throw usage_error("samples per problem must be at least 1");
    if (problems.empty()) throw data_error("no problems to sample");

    const bool fewshot = n == 1 && cfg.fewshot_round1;
    std::vector<std::optional<detail::task_output>> outputs(problems.size() * 3);
    auto header = cfg.header;
    header["seed"] = cfg.seed;
    header["round"] = n;
    header["model"] = model;
    header["samples"] = cfg.samples;

    try {
        parallel_for_each(outputs.size(), cfg.jobs, [&](std::size_t t) {
            const auto& p = problems[t / 3];
            const auto m = all_modalities[t % 3];
            const fewshot_set* fs = nullptr;
            if (fewshot) {
                auto it = cfg.fewshot.find(m);
                if (it != cfg.fewshot.end()) fs = &it->second;
            }
            detail::task_output out;
            out.prompt = build_prompt(p, m, fs);
            gen_request r;
            r.prompt = out.prompt;
            r.temperature = cfg.temperature;
            r.max_tokens = cfg.max_tokens;
            r.n_samples = cfg.samples;
            r.seed = derive_seed(cfg.seed, "gen/" + std::to_string(n) + "/" + p.id + "/" + to_string(m));
            r.problem_id = p.id;
            r.channel = to_string(m);
            r.model = model;
            auto texts = b.generate(r);
            if (static_cast<int>(texts.size()) != cfg.samples)
                throw backend_unavailable("backend returned " + std::to_string(texts.size()) + " of " +
                                          std::to_string(cfg.samples) + " samples");
            for (auto& text : texts) out.traces.push_back(extract_trace(std::move(text), m, p.id));
            out.kept = first_passing_index(out.traces, p.gold);
            outputs[t] = std::move(out);
        });
    } catch (const backend_error&) {
        write_text_file(cfg.out_dir / ("round_" + std::to_string(n) + "_traces.partial.jsonl"),
                        detail::render_traces(outputs, problems, header));
        throw;
    }

    std::vector<std::vector<curated_example>> parts(3);
    for (std::size_t t = 0; t < outputs.size(); ++t) {
        const auto& out = *outputs[t];
        if (out.kept) parts[t % 3].push_back(make_curated(out.traces[*out.kept], out.prompt, n));
    }
    if (cfg.accumulate && !prior.empty()) parts.emplace_back(prior.begin(), prior.end());

    round_result res;
    res.round = n;
    res.model = model;
    res.dataset = mix_datasets(parts, derive_seed(cfg.seed, "mix/round-" + std::to_string(n)), n);
    res.dataset.seed = cfg.seed;  // the header records the run seed; the shuffle stream derives from it
    res.dataset_path = cfg.out_dir / ("round_" + std::to_string(n) + ".jsonl");
    res.traces_path = cfg.out_dir / ("round_" + std::to_string(n) + "_traces.jsonl");
    nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
    if (cfg.header.is_object() && cfg.header.contains("inputs")) inputs = cfg.header["inputs"];
    export_round(res.dataset, res.dataset_path, inputs);
    write_text_file(res.traces_path, detail::render_traces(outputs, problems, header));

    if (cfg.trainer_hook)
        res.next_model = detail::run_trainer_hook(*cfg.trainer_hook, n, res.dataset_path, model);
    return res;
}

// Rounds 1..N; each round samples from the model the previous round's
// trainer hook reported.
inline std::vector<round_result> evolve(const round_config& cfg, const std::vector<problem>& problems, backend& b) {
    if (cfg.rounds < 1) throw usage_error("rounds must be at least 1");
    std::vector<round_result> results;
    std::vector<curated_example> history;
    std::string model = cfg.model;
    for (int n = 1; n <= cfg.rounds; ++n) {
        auto res = run_round(n, cfg, problems, b, model, history);
        for (const auto& e : res.dataset.examples)
            if (e.round == n) history.push_back(e);
        if (res.next_model) model = *res.next_model;
        results.push_back(std::move(res));
    }
    return results;
}

// ---------------------------------------------------------------------------
// Inference

struct infer_config {
    std::uint64_t seed = 42;
    double temperature = 0.7;
    int max_tokens = 2048;
    std::size_t jobs = 8;
    std::string model;
};

using modality_votes = std::array<std::optional<answer>, 3>;

struct vote_outcome {
    modality_votes answers;
    answer final = answer::C;
    bool tie_broken = false;
    std::optional<modality> tie_source;

    bool operator==(const vote_outcome&) const = default;
};

// Strict majority among non-None votes; otherwise a uniform pick among the
// modalities that answered, drawn from a stream keyed by (seed, problem).
inline vote_outcome majority_vote(const modality_votes& votes, std::uint64_t seed, const std::string& problem_id) {
    vote_outcome out;
    out.answers = votes;
    std::array<int, 3> count{};
    std::vector<modality> answered;
    for (auto m : all_modalities) {
        if (!votes[index_of(m)]) continue;
        ++count[static_cast<std::size_t>(*votes[index_of(m)])];
        answered.push_back(m);
    }
    if (answered.empty()) throw no_answer_produced(problem_id);
    for (auto a : all_answers) {
        if (2 * count[static_cast<std::size_t>(a)] > static_cast<int>(answered.size())) {
            out.final = a;
            return out;
        }
    }
    rng_t rng(derive_seed(seed, "vote/" + problem_id));
    auto pick = answered[uniform_below(rng, answered.size())];
    out.final = *votes[index_of(pick)];
    out.tie_broken = true;
    out.tie_source = pick;
    return out;
}

// Most frequent non-None answer; ties are broken uniformly by `stream_seed`.
inline answer plurality_vote(std::span<const std::optional<answer>> votes, std::uint64_t stream_seed,
                             const std::string& problem_id) {
    std::array<std::size_t, 3> count{};
    for (const auto& v : votes)
        if (v) ++count[static_cast<std::size_t>(*v)];
    auto best = *std::max_element(count.begin(), count.end());
    if (best == 0) throw no_answer_produced(problem_id);
    std::vector<answer> tied;
    for (auto a : all_answers)
        if (count[static_cast<std::size_t>(a)] == best) tied.push_back(a);
    if (tied.size() == 1) return tied.front();
    rng_t rng(stream_seed);
    return tied[uniform_below(rng, tied.size())];
}

namespace detail {

inline std::vector<trace> sample_traces(const problem& p, modality m, int k, backend& b, const infer_config& cfg) {
    gen_request r;
    r.prompt = build_prompt(p, m);
    r.temperature = cfg.temperature;
    r.max_tokens = cfg.max_tokens;
    r.n_samples = k;
    r.seed = derive_seed(cfg.seed, "infer/" + p.id + "/" + to_string(m));
    r.problem_id = p.id;
    r.channel = to_string(m);
    r.model = cfg.model;
    std::vector<trace> out;
    for (auto& text : b.generate(r)) out.push_back(extract_trace(std::move(text), m, p.id));
    if (static_cast<int>(out.size()) != k) throw backend_unavailable("short sample batch for " + p.id);
    return out;
}

}  // namespace detail

inline vote_outcome mot_infer(const problem& p, backend& b, const infer_config& cfg) {
    modality_votes votes;
    for (auto m : all_modalities) votes[index_of(m)] = detail::sample_traces(p, m, 1, b, cfg).front().predicted;
    return majority_vote(votes, cfg.seed, p.id);
}

inline answer self_consistency(const problem& p, modality m, int k, backend& b, const infer_config& cfg,
                               std::vector<std::optional<answer>>* votes_out = nullptr) {
    if (k < 1) throw usage_error("self-consistency needs k >= 1");
    std::vector<std::optional<answer>> votes;
    for (const auto& tr : detail::sample_traces(p, m, k, b, cfg)) votes.push_back(tr.predicted);
    if (votes_out) *votes_out = votes;
    return plurality_vote(votes, derive_seed(cfg.seed, "sc/" + to_string(m) + "/" + p.id), p.id);
}

// "mot", "sot:<modality>[@k]" or "sc:<modality>@k".
struct infer_mode {
    enum class kind { mot, sot, sc } type = kind::mot;
    modality mode = modality::nl;
    int k = 1;

    static infer_mode parse(const std::string& text) {
        infer_mode m;
        if (text == "mot") return m;
        auto colon = text.find(':');
        if (colon == std::string::npos) throw usage_error("mode must be mot, sot:<modality>[@k] or sc:<modality>@k");
        auto head = text.substr(0, colon), rest = text.substr(colon + 1);
        auto at = rest.find('@');
        m.mode = parse_modality(rest.substr(0, at));
        if (at != std::string::npos) {
            try {
                std::size_t used = 0;
                m.k = std::stoi(rest.substr(at + 1), &used);
                if (used != rest.size() - at - 1) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw usage_error("bad sample count in mode '" + text + "'");
            }
            if (m.k < 1) throw usage_error("sample count must be positive in mode '" + text + "'");
        }
        if (head == "sot") m.type = kind::sot;
        else if (head == "sc") m.type = kind::sc;
        else throw usage_error("unknown inference mode '" + head + "'");
        if (m.type == kind::sc && at == std::string::npos) throw usage_error("sc mode needs @k");
        return m;
    }
};

struct sampled_trace {
    std::size_t sample_index = 0;
    trace tr;
};

inline nlohmann::ordered_json to_json(const sampled_trace& s) {
    auto j = to_json(s.tr);
    j["sample_index"] = s.sample_index;
    return j;
}

// Scores every problem. mot emits the three per-modality answers plus a
// "mot" record; sc emits the k samples plus an "sc" record; sot emits the k
// samples. A problem with no parseable answer is scored as None. Generated
// traces are appended to `traces_out` in problem order when it is given.
inline prediction_log run_inference(const std::vector<problem>& problems, backend& b, const infer_mode& mode,
                                    const infer_config& cfg, std::vector<sampled_trace>* traces_out = nullptr) {
    std::vector<std::vector<prediction>> rows(problems.size());
    std::vector<std::vector<sampled_trace>> traces(problems.size());
    parallel_for_each(problems.size(), cfg.jobs, [&](std::size_t i) {
        const auto& p = problems[i];
        auto& out = rows[i];
        auto keep = [&](std::size_t s, const trace& tr) { traces[i].push_back({s, tr}); };
        switch (mode.type) {
            case infer_mode::kind::mot: {
                modality_votes votes;
                for (auto m : all_modalities) {
                    auto tr = detail::sample_traces(p, m, 1, b, cfg).front();
                    votes[index_of(m)] = tr.predicted;
                    out.push_back(score(p.id, to_string(m), 0, tr.predicted, p.gold));
                    keep(0, tr);
                }
                std::optional<answer> final;
                try {
                    final = majority_vote(votes, cfg.seed, p.id).final;
                } catch (const no_answer_produced&) {
                }
                out.push_back(score(p.id, "mot", 0, final, p.gold));
                break;
            }
            case infer_mode::kind::sot:
            case infer_mode::kind::sc: {
                auto sampled = detail::sample_traces(p, mode.mode, mode.k, b, cfg);
                std::vector<std::optional<answer>> votes;
                for (std::size_t s = 0; s < sampled.size(); ++s) {
                    votes.push_back(sampled[s].predicted);
                    out.push_back(score(p.id, to_string(mode.mode), s, sampled[s].predicted, p.gold));
                    keep(s, sampled[s]);
                }
                if (mode.type == infer_mode::kind::sot) break;
                std::optional<answer> final;
                try {
                    final = plurality_vote(votes, derive_seed(cfg.seed, "sc/" + to_string(mode.mode) + "/" + p.id), p.id);
                } catch (const no_answer_produced&) {
                }
                out.push_back(score(p.id, "sc", 0, final, p.gold));
                break;
            }
        }
    });
    prediction_log log;
    for (auto& r : rows)
        for (auto& p : r) log.add(std::move(p));
    if (traces_out)
        for (auto& t : traces) traces_out->insert(traces_out->end(), t.begin(), t.end());
    return log;
}

}  // namespace mot
