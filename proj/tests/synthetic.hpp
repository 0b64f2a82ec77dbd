#pragma once

// Scripted generation world: synthetic problems plus a stub table whose
// per-sample outcome (pass, wrong answer, bad format, missing answer) is a
// pure function of (seed, problem, modality, sample). Tests derive expected
// keep-first results from the same function.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mot/data.hpp"
#include "mot/llm_client.hpp"
#include "mot/random.hpp"
#include "mot/rationale.hpp"

namespace mot::testing {

enum class outcome { pass, wrong, invalid, no_answer };

inline std::vector<problem> synthetic_problems(std::size_t count, std::uint64_t seed) {
    std::vector<problem> out;
    rng_t rng(derive_seed(seed, "synthetic-problems"));
    for (std::size_t i = 0; i < count; ++i) {
        problem p;
        auto digits = std::to_string(i);
        p.id = "syn" + std::string(digits.size() < 3 ? 3 - digits.size() : 0, '0') + digits;
        p.premises = "Every widget " + std::to_string(i) + " is blue.\nWidget w" + std::to_string(i) + " is a widget.";
        p.conclusion = "Widget w" + std::to_string(i) + " is blue.";
        p.gold = all_answers[uniform_below(rng, 3)];
        p.depth = static_cast<int>(uniform_below(rng, 6));
        out.push_back(std::move(p));
    }
    return out;
}

inline outcome scripted_outcome(std::uint64_t seed, const std::string& pid, modality m, int sample,
                                const std::string& model = "") {
    rng_t rng(derive_seed(seed, "script/" + model + "/" + pid + "/" + to_string(m) + "/" + std::to_string(sample)));
    switch (uniform_below(rng, 10)) {
        case 0: case 1: case 2: return outcome::pass;
        case 3: case 4: case 5: return outcome::wrong;
        case 6: case 7: return outcome::invalid;
        default: return outcome::no_answer;
    }
}

inline answer wrong_for(answer gold) { return all_answers[(static_cast<int>(gold) + 1) % 3]; }

// Appears in every synthetic rationale so tests can tell samples apart.
inline std::string sample_marker(const std::string& pid, int sample) { return pid + " #" + std::to_string(sample); }

inline std::string synthetic_text(modality m, const std::string& pid, int sample, outcome o, answer gold) {
    auto tags = tags_of(m);
    std::string body;
    switch (m) {
        case modality::nl:
            body = "\nStep 1: read the premises of " + pid + ".\nStep 2: apply them (sample " + std::to_string(sample) +
                   ").\n";
            if (o == outcome::invalid) body += "<code>\n";
            break;
        case modality::code:
            body = "\nclass Widget:\n    def is_blue(self):\n        return True  # " + pid + "/" +
                   std::to_string(sample) + "\n";
            if (o == outcome::invalid) body = "\nprint('" + pid + "')\n";
            break;
        case modality::truth_table:
            body = "\n| widget | blue |\n|---|---|\n| T | T |\n";
            if (o == outcome::invalid) body += "<nl_cot>\n";
            break;
    }
    body += "[" + sample_marker(pid, sample) + "]\n";
    std::string text = std::string(tags.open) + body + std::string(tags.close) + "\n";
    if (o == outcome::no_answer) return text + "The answer is unclear.";
    return text + render_answer_block(o == outcome::wrong ? wrong_for(gold) : gold);
}

// Fills `stub` with `samples` scripted texts per (problem, modality) and
// returns the first passing sample index for each task.
inline std::map<std::pair<std::string, modality>, std::optional<int>> fill_stub(
    stub_backend& stub, const std::vector<problem>& problems, int samples, std::uint64_t seed,
    const std::string& model = "") {
    std::map<std::pair<std::string, modality>, std::optional<int>> first_pass;
    for (const auto& p : problems) {
        for (auto m : all_modalities) {
            std::optional<int> first;
            for (int s = 0; s < samples; ++s) {
                auto o = scripted_outcome(seed, p.id, m, s, model);
                if (o == outcome::pass && !first) first = s;
                stub.add(p.id, to_string(m), s, synthetic_text(m, p.id, s, o, p.gold), model);
            }
            first_pass[{p.id, m}] = first;
        }
    }
    return first_pass;
}

}  // namespace mot::testing
