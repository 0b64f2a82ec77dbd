#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace mot {

// Multiple-choice options of the benchmark prompt: (A) True (B) False (C) Uncertain.
enum class answer { A, B, C };

inline constexpr answer all_answers[] = {answer::A, answer::B, answer::C};

inline char to_char(answer a) {
    switch (a) {
        case answer::A: return 'A';
        case answer::B: return 'B';
        case answer::C: return 'C';
    }
    return '?';
}

inline std::string to_string(answer a) { return std::string(1, to_char(a)); }

inline std::string to_string(const std::optional<answer>& a) { return a ? to_string(*a) : std::string("None"); }

inline std::optional<answer> answer_from_char(char c) {
    switch (c) {
        case 'A': return answer::A;
        case 'B': return answer::B;
        case 'C': return answer::C;
        default: return std::nullopt;
    }
}

inline std::optional<answer> answer_from_string(std::string_view s) {
    if (s.size() != 1) return std::nullopt;
    return answer_from_char(s.front());
}

// Text of the option, e.g. "(C) Uncertain".
inline std::string option_text(answer a) {
    switch (a) {
        case answer::A: return "(A) True";
        case answer::B: return "(B) False";
        case answer::C: return "(C) Uncertain";
    }
    return "";
}

}  // namespace mot
