#pragma once

// Fixed prompt texts. Both are rendered byte-for-byte; changing a character
// changes every prompt-keyed artifact downstream.

#include <string_view>

namespace mot::prompts {

inline constexpr std::string_view instruction = R"(You are a rigorous and logically precise AI assistant. Your task is to answer a logical reasoning problem strictly following one of three modes, as explicitly specified in the input. Only one mode will be present in the input. Follow that mode exclusively.

- Code Mode (<code> ... <end_of_code> <answer> ... <end_of_answer>)
  - If the input contains <code>, translate the problem into Python code.
  - Execute the logic and derive the answer.

- Natural Language Chain-of-Thought Mode (<nl_cot> ... <end_of_nl_cot> <answer> ... <end_of_answer>)
  - If the input contains <nl_cot>, solve the problem step by step in natural language.

- Truth Table Mode (<truth_table> ... <end_of_truth_table> <answer> ... <end_of_answer>)
  - If the input contains <truth_table>, construct a truth table and derive the answer from it.

### Rules
- Only use the mode specified in the input. Do not switch modes.
- Generate output strictly in the specified mode and format, with no additional text.
- Enclose all reasoning strictly within the corresponding mode tags.
- The final answer must be strictly enclosed in <answer> ... <end_of_answer>.
- Do not provide any reasoning or explanations outside of the designated mode tags.

)";

inline constexpr std::string_view problem_lead = "The following is the problem you need to solve.\n\n";

inline constexpr std::string_view options_block = "<options>\n(A) True\n(B) False\n(C) Uncertain\n</options>\n\n";

// Inserted before each few-shot exemplar; N counts from 1.
inline constexpr std::string_view example_delimiter = "### Example ";

inline constexpr std::string_view judge = R"(You must determine whether a rationale faithfully justifies the truth value of a conclusion given a set of premises.

Faithful means all and only the steps actually used in deriving the conclusion:
- are grounded in the given premises or prior derived steps,
- apply valid inference rules (no illicit converse or contraposition),
- cover every disjunction branch or quantifier case,
- use no unstated assumptions, external knowledge, or background commonsense,
- and correctly assess whether the conclusion is supported or contradicted by the premises.

You must also diagnose where and how the rationale fails when it is unfaithful, allowing trivial unused remarks to be overridden.

Error Types:
- Missing Branch: Failing to exhaustively consider all branches of a disjunction, conditionals, or quantified cases.
- Invalid Converse: Illicitly reversing the direction of a conditional (e.g., mistaking 'A → B' for 'B → A').
- Commonsense Injection: Using external background knowledge or commonsense not entailed or implied by the premises.
- Factual Misquote: Misrepresenting, distorting, or misquoting the explicit content of the premises.

Input (JSON):
{
  "premises":   "<string>",
  "conclusion": "<string>",
  "rationale":  "<string>",
  "label":      "<string>",
  "predict":    "<string>"
}

Output (JSON):
{
  "faithful":         true | false,
  "error_type":       "<missing branch | invalid converse | commonsense injection | factual misquote>",
  "error_location":   "<e.g., Step 3, Clause 2>",
  "override":         true | false,
  "analysis":         "<brief summary explaining why the reasoning is faithful or unfaithful, citing specific logical failures>"
}

Notes:
- If multiple error types apply, list them all separated by commas.
- Always identify the first point in the rationale where the faithfulness failure occurs.
- Be concise, precise, and consistent in your labeling.

Input:
)";

}  // namespace mot::prompts
