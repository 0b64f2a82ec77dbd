#pragma once

// Judge-based diagnosis of unfaithful natural-language rationales and the
// per-category distribution over failed cases.

#include <array>
#include <cctype>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mot/data.hpp"
#include "mot/llm_client.hpp"
#include "mot/prompts.hpp"
#include "mot/rationale.hpp"

namespace mot {

class judge_unparseable : public backend_error {
public:
    explicit judge_unparseable(const std::string& pid)
        : backend_error("JudgeUnparseable: judge response for " + pid + " lacks the required fields") {}
};

class empty_input : public data_error {
public:
    empty_input() : data_error("EmptyInput: no verdicts to aggregate") {}
};

enum class error_category { missing_branch, invalid_converse, commonsense_injection, factual_misquote };

inline constexpr error_category all_error_categories[] = {
    error_category::missing_branch, error_category::invalid_converse, error_category::commonsense_injection,
    error_category::factual_misquote};

inline std::string to_string(error_category c) {
    switch (c) {
        case error_category::missing_branch: return "MissingBranch";
        case error_category::invalid_converse: return "InvalidConverse";
        case error_category::commonsense_injection: return "CommonsenseInjection";
        case error_category::factual_misquote: return "FactualMisquote";
    }
    return "?";
}

// Accepts "missing branch", "MissingBranch", "missing_branch" and the like.
inline std::optional<error_category> error_category_from_string(std::string_view s) {
    std::string key;
    for (char c : s)
        if (std::isalpha(static_cast<unsigned char>(c))) key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (auto c : all_error_categories) {
        std::string name;
        for (char ch : to_string(c)) name += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        if (key == name) return c;
    }
    return std::nullopt;
}

// Invariant: faithful implies error_types is empty.
struct error_verdict {
    std::string problem_id;
    bool faithful = false;
    std::set<error_category> error_types;
    std::string error_location;
    bool override_remarks = false;
    std::string analysis;

    bool operator==(const error_verdict&) const = default;
};

inline nlohmann::ordered_json to_json(const error_verdict& v) {
    nlohmann::ordered_json j;
    j["problem_id"] = v.problem_id;
    j["faithful"] = v.faithful;
    j["error_types"] = nlohmann::ordered_json::array();
    for (auto c : v.error_types) j["error_types"].push_back(to_string(c));
    j["error_location"] = v.error_location;
    j["override"] = v.override_remarks;
    j["analysis"] = v.analysis;
    return j;
}

inline std::string render_judge_prompt(const problem& p, const trace& tr) {
    nlohmann::ordered_json input;
    input["premises"] = p.premises;
    input["conclusion"] = p.conclusion;
    input["rationale"] = tr.rationale.value_or("");
    input["label"] = answer_label(p.gold);
    input["predict"] = tr.predicted ? answer_label(*tr.predicted) : std::string("None");
    return std::string(prompts::judge) + input.dump(2);
}

namespace detail {

// End of the brace-balanced object starting at `open`, ignoring braces in
// JSON strings.
inline std::optional<std::size_t> object_end(std::string_view text, std::size_t open) {
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = open; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
        } else if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}' && --depth == 0) {
            return i;
        }
    }
    return std::nullopt;
}

inline std::optional<std::set<error_category>> parse_error_types(const nlohmann::json& j) {
    std::vector<std::string> phrases;
    if (j.is_null()) return std::set<error_category>{};
    if (j.is_string()) {
        auto s = j.get<std::string>();
        std::size_t start = 0;
        while (start <= s.size()) {
            auto comma = s.find(',', start);
            phrases.push_back(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    } else if (j.is_array()) {
        for (const auto& e : j) {
            if (!e.is_string()) return std::nullopt;
            phrases.push_back(e.get<std::string>());
        }
    } else {
        return std::nullopt;
    }
    std::set<error_category> out;
    for (const auto& phrase : phrases) {
        std::string letters;
        for (char c : phrase)
            if (std::isalpha(static_cast<unsigned char>(c))) letters += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (letters.empty() || letters == "none" || letters == "na") continue;
        auto c = error_category_from_string(phrase);
        if (!c) return std::nullopt;
        out.insert(*c);
    }
    return out;
}

inline std::optional<error_verdict> verdict_from_object(const nlohmann::json& j) {
    if (!j.is_object()) return std::nullopt;
    auto f = j.find("faithful"), et = j.find("error_type"), loc = j.find("error_location"), ov = j.find("override"),
         an = j.find("analysis");
    if (f == j.end() || !f->is_boolean() || et == j.end() || loc == j.end() || ov == j.end() || !ov->is_boolean() ||
        an == j.end() || !an->is_string())
        return std::nullopt;
    if (!loc->is_string() && !loc->is_null()) return std::nullopt;
    auto types = parse_error_types(*et);
    if (!types) return std::nullopt;
    error_verdict v;
    v.faithful = f->get<bool>();
    if (v.faithful && !types->empty()) return std::nullopt;
    if (!v.faithful && types->empty()) return std::nullopt;
    v.error_types = std::move(*types);
    v.error_location = loc->is_string() ? loc->get<std::string>() : "";
    v.override_remarks = ov->get<bool>();
    v.analysis = an->get<std::string>();
    return v;
}

}  // namespace detail

// First JSON object in `text` carrying the output schema; extra fields are
// ignored. Surrounding prose and code fences are tolerated.
inline std::optional<error_verdict> parse_verdict(std::string_view text) {
    for (auto open = text.find('{'); open != std::string_view::npos; open = text.find('{', open + 1)) {
        auto end = detail::object_end(text, open);
        if (!end) continue;
        auto j = nlohmann::json::parse(text.substr(open, *end - open + 1), nullptr, false);
        if (j.is_discarded()) continue;
        if (auto v = detail::verdict_from_object(j)) return v;
    }
    return std::nullopt;
}

struct judge_options {
    std::string model;
    double temperature = 0.0;
    int max_tokens = 1024;
};

// Asks the judge once, then once more on a malformed answer.
inline error_verdict judge_rationale(const problem& p, const trace& tr, backend& judge, const judge_options& opt = {}) {
    if (tr.mode != modality::nl) throw usage_error("only natural-language rationales are judged");
    gen_request r;
    r.prompt = render_judge_prompt(p, tr);
    r.temperature = opt.temperature;
    r.max_tokens = opt.max_tokens;
    r.n_samples = 1;
    r.problem_id = p.id;
    r.channel = "judge";
    r.model = opt.model;
    for (int attempt = 0; attempt < 2; ++attempt) {
        r.first_sample = attempt;
        auto texts = judge.generate(r);
        if (texts.empty()) continue;
        if (auto v = parse_verdict(texts.front())) {
            v->problem_id = p.id;
            return *v;
        }
    }
    throw judge_unparseable(p.id);
}

struct error_distribution {
    std::size_t cases = 0;
    std::array<std::size_t, 4> counts{};

    double percent(error_category c) const {
        return 100.0 * static_cast<double>(counts[static_cast<std::size_t>(c)]) / static_cast<double>(cases);
    }
};

// Percent of verdicts exhibiting each category; a verdict with several
// categories counts toward each, so the total may exceed 100.
inline error_distribution aggregate_distribution(std::span<const error_verdict> verdicts) {
    if (verdicts.empty()) throw empty_input();
    error_distribution d;
    d.cases = verdicts.size();
    for (const auto& v : verdicts)
        if (!v.faithful)
            for (auto c : v.error_types) ++d.counts[static_cast<std::size_t>(c)];
    return d;
}

inline nlohmann::ordered_json to_json(const error_distribution& d) {
    nlohmann::ordered_json j;
    j["cases"] = d.cases;
    for (auto c : all_error_categories) {
        j["percent"][to_string(c)] = d.percent(c);
        j["count"][to_string(c)] = d.counts[static_cast<std::size_t>(c)];
    }
    return j;
}

}  // namespace mot
