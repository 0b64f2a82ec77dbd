#pragma once

// Modality-tagged model outputs: extraction of the rationale and answer,
// the format-validity check, and the binary reward.

#include <cctype>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "mot/answer.hpp"
#include "mot/errors.hpp"

namespace mot {

enum class modality { nl, code, truth_table };

inline constexpr modality all_modalities[] = {modality::nl, modality::code, modality::truth_table};

struct modality_tags {
    std::string_view open;
    std::string_view close;
};

inline modality_tags tags_of(modality m) {
    switch (m) {
        case modality::nl: return {"<nl_cot>", "<end_of_nl_cot>"};
        case modality::code: return {"<code>", "<end_of_code>"};
        case modality::truth_table: return {"<truth_table>", "<end_of_truth_table>"};
    }
    return {};
}

// The opening tag that ends a prompt and elicits the modality.
inline std::string_view elicitor(modality m) { return tags_of(m).open; }

// Wire name used in JSONL records and on the command line.
inline std::string to_string(modality m) {
    switch (m) {
        case modality::nl: return "nl";
        case modality::code: return "code";
        case modality::truth_table: return "truth_table";
    }
    return "?";
}

inline std::optional<modality> modality_from_string(std::string_view s) {
    if (s == "nl" || s == "nl_cot" || s == "NL") return modality::nl;
    if (s == "code" || s == "Code") return modality::code;
    if (s == "truth_table" || s == "tt" || s == "TruthTable") return modality::truth_table;
    return std::nullopt;
}

inline modality parse_modality(std::string_view s) {
    if (auto m = modality_from_string(s)) return *m;
    throw usage_error("unknown modality '" + std::string(s) + "' (expected nl, code or truth_table)");
}

inline constexpr std::string_view answer_open = "<answer>";
inline constexpr std::string_view answer_close = "<end_of_answer>";

struct trace {
    std::string problem_id;
    modality mode = modality::nl;
    std::string raw_text;
    std::optional<std::string> rationale;
    std::optional<answer> predicted;
    bool valid = false;

    bool operator==(const trace&) const = default;
};

enum class reward_reason { correct, wrong_answer, invalid_format, no_answer };

inline const char* to_string(reward_reason r) {
    switch (r) {
        case reward_reason::correct: return "correct";
        case reward_reason::wrong_answer: return "wrong_answer";
        case reward_reason::invalid_format: return "invalid_format";
        case reward_reason::no_answer: return "no_answer";
    }
    return "?";
}

struct reward_result {
    int value = 0;
    reward_reason reason = reward_reason::invalid_format;
};

namespace detail {

inline bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

inline bool contains_word(std::string_view text, std::string_view word) {
    for (std::size_t pos = text.find(word); pos != std::string_view::npos; pos = text.find(word, pos + 1)) {
        bool left = pos == 0 || !word_char(text[pos - 1]);
        std::size_t end = pos + word.size();
        bool right = end >= text.size() || !word_char(text[end]);
        if (left && right) return true;
    }
    return false;
}

inline bool contains_any_tag(std::string_view text, modality m) {
    auto t = tags_of(m);
    return text.find(t.open) != std::string_view::npos || text.find(t.close) != std::string_view::npos;
}

// First option letter in an answer block: "(X)" or a standalone X, whichever
// comes first.
inline std::optional<answer> parse_answer_block(std::string_view block) {
    for (std::size_t i = 0; i < block.size(); ++i) {
        char c = block[i];
        if (c == '(' && i + 2 < block.size() && block[i + 2] == ')') {
            if (auto a = answer_from_char(block[i + 1])) return a;
        }
        if (auto a = answer_from_char(c)) {
            bool left = i == 0 || !word_char(block[i - 1]);
            bool right = i + 1 >= block.size() || !word_char(block[i + 1]);
            if (left && right) return a;
        }
    }
    return std::nullopt;
}

inline bool blank(std::string_view s) {
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    return true;
}

}  // namespace detail

// Format check for a rationale of modality `m`; `rationale` is nullopt when the
// modality's tags were missing or unpaired. Code rationales must contain both
// a `def` and a `class` keyword as whole words.
inline bool is_valid(const std::optional<std::string>& rationale, modality m) {
    if (!rationale || detail::blank(*rationale)) return false;
    for (auto other : all_modalities)
        if (detail::contains_any_tag(*rationale, other)) return false;
    if (m == modality::code)
        return detail::contains_word(*rationale, "def") && detail::contains_word(*rationale, "class");
    return true;
}

// The rationale is the text between the first closing tag of `m` and the
// nearest opening tag before it. The opening tag may be absent, since prompts
// end with it and the model output starts right after. Any tag belonging to a
// different modality makes the trace invalid.
inline trace extract_trace(std::string raw, modality m, std::string problem_id) {
    trace tr;
    tr.problem_id = std::move(problem_id);
    tr.mode = m;
    tr.raw_text = std::move(raw);
    std::string_view text = tr.raw_text;
    auto tags = tags_of(m);

    std::size_t search_from = 0;
    if (auto close = text.find(tags.close); close != std::string_view::npos) {
        std::size_t start = 0;
        if (close >= tags.open.size()) {
            if (auto open = text.rfind(tags.open, close - tags.open.size()); open != std::string_view::npos)
                start = open + tags.open.size();
        }
        tr.rationale = std::string(text.substr(start, close - start));
        search_from = close + tags.close.size();
    }

    if (auto open = text.find(answer_open, search_from); open != std::string_view::npos) {
        auto body = open + answer_open.size();
        if (auto close = text.find(answer_close, body); close != std::string_view::npos)
            tr.predicted = detail::parse_answer_block(text.substr(body, close - body));
    }

    bool foreign = false;
    for (auto other : all_modalities)
        if (other != m && detail::contains_any_tag(text, other)) foreign = true;
    tr.valid = !foreign && is_valid(tr.rationale, m);
    return tr;
}

inline reward_result reward(const trace& tr, answer gold) {
    if (!tr.valid) return {0, reward_reason::invalid_format};
    if (!tr.predicted) return {0, reward_reason::no_answer};
    if (*tr.predicted != gold) return {0, reward_reason::wrong_answer};
    return {1, reward_reason::correct};
}

inline std::string render_answer_block(answer a) {
    return std::string(answer_open) + "\nThe final answer is (" + to_string(a) + ").\n" + std::string(answer_close);
}

// Canonical text for a trace: tagged rationale followed by the answer block.
inline std::string render_trace(const trace& tr) {
    std::string out;
    auto tags = tags_of(tr.mode);
    if (tr.rationale) {
        out += tags.open;
        out += *tr.rationale;
        out += tags.close;
    }
    if (tr.predicted) {
        if (!out.empty()) out += '\n';
        out += render_answer_block(*tr.predicted);
    }
    return out;
}

inline nlohmann::ordered_json to_json(const trace& tr) {
    nlohmann::ordered_json j;
    j["problem_id"] = tr.problem_id;
    j["modality"] = to_string(tr.mode);
    j["raw_text"] = tr.raw_text;
    j["rationale"] = tr.rationale ? nlohmann::ordered_json(*tr.rationale) : nlohmann::ordered_json(nullptr);
    j["answer"] = tr.predicted ? nlohmann::ordered_json(to_string(*tr.predicted)) : nlohmann::ordered_json(nullptr);
    j["valid"] = tr.valid;
    return j;
}

inline trace trace_from_json(const nlohmann::json& j) {
    trace tr;
    tr.problem_id = j.at("problem_id").get<std::string>();
    auto m = modality_from_string(j.at("modality").get<std::string>());
    if (!m) throw data_error("unknown modality in trace record");
    tr.mode = *m;
    tr.raw_text = j.at("raw_text").get<std::string>();
    if (j.contains("rationale") && !j["rationale"].is_null()) tr.rationale = j["rationale"].get<std::string>();
    if (j.contains("answer") && !j["answer"].is_null()) {
        tr.predicted = answer_from_string(j["answer"].get<std::string>());
        if (!tr.predicted) throw data_error("trace answer must be A, B, C or null");
    }
    tr.valid = j.at("valid").get<bool>();
    return tr;
}

}  // namespace mot
