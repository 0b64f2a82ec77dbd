#pragma once

// Benchmark problems, curated per-round training examples, and the round
// export consumed by an external fine-tuner.

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "mot/answer.hpp"
#include "mot/io.hpp"
#include "mot/random.hpp"
#include "mot/rationale.hpp"

namespace mot {

enum class problem_source { folio, proofwriter, proverqa, custom };

inline std::string to_string(problem_source s) {
    switch (s) {
        case problem_source::folio: return "folio";
        case problem_source::proofwriter: return "proofwriter";
        case problem_source::proverqa: return "proverqa";
        case problem_source::custom: return "custom";
    }
    return "custom";
}

inline std::optional<problem_source> source_from_string(std::string_view s) {
    if (s == "folio") return problem_source::folio;
    if (s == "proofwriter") return problem_source::proofwriter;
    if (s == "proverqa") return problem_source::proverqa;
    if (s == "custom") return problem_source::custom;
    return std::nullopt;
}

struct problem {
    std::string id;
    std::string premises;
    std::string conclusion;
    answer gold = answer::C;
    std::optional<int> depth;
    problem_source source = problem_source::custom;
    std::optional<std::filesystem::path> theory_file;

    bool operator==(const problem&) const = default;
};

class duplicate_id : public data_error {
public:
    explicit duplicate_id(const std::string& id) : data_error("DuplicateId: " + id) {}
};

class overlap_error : public data_error {
public:
    explicit overlap_error(const std::string& what) : data_error("OverlapError: " + what) {}
};

// Gold labels: True -> A, False -> B, Uncertain or Unknown -> C. Option
// letters are accepted as-is. Case-insensitive.
inline std::optional<answer> label_to_answer(std::string_view label) {
    std::string s;
    for (char c : label) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "true" || s == "a") return answer::A;
    if (s == "false" || s == "b") return answer::B;
    if (s == "uncertain" || s == "unknown" || s == "c") return answer::C;
    return std::nullopt;
}

inline std::string answer_label(answer a) {
    switch (a) {
        case answer::A: return "True";
        case answer::B: return "False";
        case answer::C: return "Uncertain";
    }
    return "Uncertain";
}

inline nlohmann::ordered_json to_json(const problem& p) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["premises"] = p.premises;
    j["conclusion"] = p.conclusion;
    j["options"] = {"True", "False", "Uncertain"};
    j["label"] = answer_label(p.gold);
    if (p.depth) j["depth"] = *p.depth;
    j["source"] = to_string(p.source);
    if (p.theory_file) j["theory"] = p.theory_file->generic_string();
    return j;
}

// Problem JSONL: {id, premises, conclusion, options?, label, depth?, source?, theory?}.
// `premises` may be a string or an array of lines. `theory` is resolved
// against the directory of `path`. A non-null `source` overrides the record.
inline std::vector<problem> load_problems(const std::filesystem::path& path,
                                          std::optional<problem_source> source = std::nullopt) {
    std::vector<problem> out;
    std::set<std::string> seen;
    const auto file = path.string();
    for_each_jsonl(path, [&](std::size_t line, const nlohmann::json& j) {
        auto fail = [&](const std::string& what) { throw schema_error(file, line, what); };
        if (!j.is_object()) fail("record must be an object");
        problem p;
        if (!j.contains("id")) fail("missing id");
        if (j["id"].is_string()) p.id = j["id"].get<std::string>();
        else if (j["id"].is_number_integer()) p.id = std::to_string(j["id"].get<long long>());
        else fail("id must be a string or integer");
        if (p.id.empty()) fail("empty id");

        if (!j.contains("premises")) fail("missing premises");
        const auto& prem = j["premises"];
        if (prem.is_string()) {
            p.premises = prem.get<std::string>();
        } else if (prem.is_array()) {
            for (const auto& s : prem) {
                if (!s.is_string()) fail("premises array must hold strings");
                if (!p.premises.empty()) p.premises += '\n';
                p.premises += s.get<std::string>();
            }
        } else {
            fail("premises must be a string or array");
        }
        if (!j.contains("conclusion") || !j["conclusion"].is_string()) fail("missing conclusion");
        p.conclusion = j["conclusion"].get<std::string>();

        if (!j.contains("label") || !j["label"].is_string()) fail("missing label");
        auto gold = label_to_answer(j["label"].get<std::string>());
        if (!gold) fail("unknown label '" + j["label"].get<std::string>() + "'");
        p.gold = *gold;

        if (j.contains("depth") && !j["depth"].is_null()) {
            if (!j["depth"].is_number_integer() || j["depth"].get<long long>() < 0) fail("depth must be a non-negative integer");
            p.depth = j["depth"].get<int>();
        }
        if (source) {
            p.source = *source;
        } else if (j.contains("source")) {
            auto s = j["source"].is_string() ? source_from_string(j["source"].get<std::string>()) : std::nullopt;
            if (!s) fail("unknown source");
            p.source = *s;
        }
        if (j.contains("theory") && !j["theory"].is_null()) {
            if (!j["theory"].is_string()) fail("theory must be a path string");
            p.theory_file = path.parent_path() / j["theory"].get<std::string>();
        }
        if (!seen.insert(p.id).second) throw duplicate_id(p.id);
        out.push_back(std::move(p));
    });
    return out;
}

struct curated_example {
    std::string problem_id;
    modality mode = modality::nl;
    std::string prompt;
    std::string target;
    int round = 1;

    bool operator==(const curated_example&) const = default;
};

// Training target for a passing trace: rationale, close tag, answer block.
// The prompt already ends with the opening tag.
inline std::string make_target(const trace& tr) {
    return tr.rationale.value_or("") + std::string(tags_of(tr.mode).close) + "\n" +
           (tr.predicted ? render_answer_block(*tr.predicted) : std::string());
}

inline curated_example make_curated(const trace& tr, std::string prompt, int round) {
    return {tr.problem_id, tr.mode, std::move(prompt), make_target(tr), round};
}

inline nlohmann::ordered_json to_json(const curated_example& e) {
    nlohmann::ordered_json j;
    j["problem_id"] = e.problem_id;
    j["modality"] = to_string(e.mode);
    j["prompt"] = e.prompt;
    j["target"] = e.target;
    j["round"] = e.round;
    return j;
}

inline curated_example curated_from_json(const nlohmann::json& j) {
    curated_example e;
    e.problem_id = j.at("problem_id").get<std::string>();
    auto m = modality_from_string(j.at("modality").get<std::string>());
    if (!m) throw data_error("unknown modality in curated record");
    e.mode = *m;
    e.prompt = j.at("prompt").get<std::string>();
    e.target = j.at("target").get<std::string>();
    e.round = j.at("round").get<int>();
    return e;
}

using modality_counts = std::array<std::size_t, 3>;

inline std::size_t index_of(modality m) { return static_cast<std::size_t>(m); }

struct round_dataset {
    int round = 1;
    std::vector<curated_example> examples;
    modality_counts counts{};
    std::uint64_t seed = 0;

    bool operator==(const round_dataset&) const = default;
};

inline modality_counts count_modalities(std::span<const curated_example> examples) {
    modality_counts c{};
    for (const auto& e : examples) ++c[index_of(e.mode)];
    return c;
}

// Concatenates the per-modality parts and applies a seeded permutation.
inline round_dataset mix_datasets(const std::vector<std::vector<curated_example>>& parts, std::uint64_t seed,
                                  int round) {
    round_dataset ds;
    ds.round = round;
    ds.seed = seed;
    std::set<std::tuple<std::string, modality, int>> keys;
    for (const auto& part : parts) {
        for (const auto& e : part) {
            if (!keys.emplace(e.problem_id, e.mode, e.round).second)
                throw overlap_error("(" + e.problem_id + ", " + to_string(e.mode) + ", round " +
                                    std::to_string(e.round) + ") appears twice");
            ds.examples.push_back(e);
        }
    }
    rng_t rng(seed);
    seeded_shuffle(ds.examples, rng);
    ds.counts = count_modalities(ds.examples);
    return ds;
}

inline std::optional<std::size_t> first_passing_index(std::span<const trace> traces, answer gold) {
    for (std::size_t i = 0; i < traces.size(); ++i)
        if (reward(traces[i], gold).value == 1) return i;
    return std::nullopt;
}

inline std::optional<trace> keep_first_passing(std::span<const trace> traces, answer gold) {
    if (auto i = first_passing_index(traces, gold)) return traces[*i];
    return std::nullopt;
}

inline nlohmann::ordered_json counts_json(const modality_counts& c) {
    nlohmann::ordered_json j;
    for (auto m : all_modalities) j[to_string(m)] = c[index_of(m)];
    return j;
}

// Header line, then one curated example per line. The header checksum
// covers every byte after the header line. `inputs` records checksums of
// the files the round was built from.
inline std::string render_round(const round_dataset& ds, const nlohmann::ordered_json& inputs = {}) {
    std::string body;
    for (const auto& e : ds.examples) body += to_json(e).dump() + "\n";
    nlohmann::ordered_json fields;
    fields["round"] = ds.round;
    fields["seed"] = ds.seed;
    fields["counts"] = counts_json(ds.counts);
    fields["examples"] = ds.examples.size();
    fields["checksum"] = checksum_tag(body);
    if (inputs.is_object() && !inputs.empty()) fields["inputs"] = inputs;
    return make_header("round_dataset", fields).dump() + "\n" + body;
}

inline void export_round(const round_dataset& ds, const std::filesystem::path& path,
                         const nlohmann::ordered_json& inputs = {}) {
    write_text_file(path, render_round(ds, inputs));
}

inline round_dataset import_round(const std::filesystem::path& path) {
    auto text = read_text_file(path);
    const auto file = path.string();
    auto nl = text.find('\n');
    if (nl == std::string::npos) throw schema_error(file, 1, "missing header line");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text.substr(0, nl));
    } catch (const nlohmann::json::parse_error&) {
        throw schema_error(file, 1, "malformed header");
    }
    if (!is_header(header) || header["_header"].value("kind", "") != "round_dataset")
        throw schema_error(file, 1, "not a round dataset");
    const auto& h = header["_header"];
    auto body = std::string_view(text).substr(nl + 1);
    if (h.value("checksum", "") != checksum_tag(body))
        throw checksum_mismatch(file + ": body does not match recorded checksum");

    round_dataset ds;
    try {
        ds.round = h.at("round").get<int>();
        ds.seed = h.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception&) {
        throw schema_error(file, 1, "header lacks round or seed");
    }
    std::size_t line = 1;
    std::size_t start = 0;
    while (start < body.size()) {
        ++line;
        auto end = body.find('\n', start);
        if (end == std::string_view::npos) end = body.size();
        auto row = body.substr(start, end - start);
        start = end + 1;
        if (row.empty()) continue;
        try {
            ds.examples.push_back(curated_from_json(nlohmann::json::parse(row)));
        } catch (const nlohmann::json::exception&) {
            throw schema_error(file, line, "malformed curated example");
        } catch (const data_error& e) {
            throw schema_error(file, line, e.what());
        }
    }
    ds.counts = count_modalities(ds.examples);
    if (h.contains("counts")) {
        for (auto m : all_modalities)
            if (h["counts"].value(to_string(m), std::size_t{0}) != ds.counts[index_of(m)])
                throw checksum_mismatch(file + ": per-modality counts disagree with header");
    }
    return ds;
}

}  // namespace mot
