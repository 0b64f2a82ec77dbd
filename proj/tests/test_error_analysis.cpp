#include <gtest/gtest.h>

#include <algorithm>

#include "mot/error_analysis.hpp"
#include "test_support.hpp"

using namespace mot;
using namespace mot::testing;

namespace {

const problem& find_problem(const std::vector<problem>& ps, const std::string& id) {
    return *std::find_if(ps.begin(), ps.end(), [&](const problem& p) { return p.id == id; });
}

trace fixture_trace(const std::string& file, const std::string& pid) {
    return extract_trace(read_file(fixture("traces/" + file)), modality::nl, pid);
}

error_verdict verdict_of(std::initializer_list<error_category> cats) {
    error_verdict v;
    v.faithful = cats.size() == 0;
    v.error_types = cats;
    return v;
}

}  // namespace

TEST(JudgePrompt, EndsWithInputObject) {
    auto problems = load_problems(fixture("demo/problems.jsonl"));
    const auto& p = find_problem(problems, "james");
    auto tr = fixture_trace("james_nl.txt", "james");
    auto prompt = render_judge_prompt(p, tr);
    ASSERT_EQ(prompt.rfind(std::string(prompts::judge), 0), 0u);
    auto input = nlohmann::json::parse(prompt.substr(prompts::judge.size()));
    EXPECT_EQ(input.at("premises"), p.premises);
    EXPECT_EQ(input.at("conclusion"), "James has lunch in the company.");
    EXPECT_EQ(input.at("rationale"), *tr.rationale);
    EXPECT_EQ(input.at("label"), "Uncertain");
    EXPECT_EQ(input.at("predict"), "True");
    std::vector<std::string> keys;
    for (auto it = input.begin(); it != input.end(); ++it) keys.push_back(it.key());
    EXPECT_EQ(keys.size(), 5u);
}

TEST(ParseVerdict, AcceptsSchemaObjectInsideProse) {
    auto v = parse_verdict(R"(Here is my assessment:
```json
{"faithful": false, "error_type": "Missing Branch, invalid converse", "error_location": "Step 3",
 "override": true, "analysis": "skips {a} case", "confidence": 0.9}
```)");
    ASSERT_TRUE(v.has_value());
    EXPECT_FALSE(v->faithful);
    EXPECT_EQ(v->error_types,
              (std::set<error_category>{error_category::missing_branch, error_category::invalid_converse}));
    EXPECT_EQ(v->error_location, "Step 3");
    EXPECT_TRUE(v->override_remarks);
    EXPECT_EQ(v->analysis, "skips {a} case");
}

TEST(ParseVerdict, FaithfulHasNoCategories) {
    auto v = parse_verdict(R"({"faithful": true, "error_type": "none", "error_location": "", "override": false, "analysis": "ok"})");
    ASSERT_TRUE(v.has_value());
    EXPECT_TRUE(v->faithful);
    EXPECT_TRUE(v->error_types.empty());
    EXPECT_FALSE(parse_verdict(
        R"({"faithful": true, "error_type": "missing branch", "error_location": "", "override": false, "analysis": ""})"));
}

TEST(ParseVerdict, RejectsMissingOrMalformedFields) {
    EXPECT_FALSE(parse_verdict("The rationale is unfaithful because it misses a branch."));
    EXPECT_FALSE(parse_verdict(R"({"faithful": false, "analysis": "x"})"));
    EXPECT_FALSE(parse_verdict(
        R"({"faithful": "no", "error_type": "missing branch", "error_location": "", "override": false, "analysis": ""})"));
    EXPECT_FALSE(parse_verdict(
        R"({"faithful": false, "error_type": "wishful thinking", "error_location": "", "override": false, "analysis": ""})"));
    EXPECT_FALSE(parse_verdict(
        R"({"faithful": false, "error_type": "", "error_location": "", "override": false, "analysis": ""})"));
    EXPECT_FALSE(parse_verdict(R"({"faithful": false, "error_type": "missing branch")"));
}

TEST(ParseVerdict, SkipsNonMatchingObjects) {
    auto v = parse_verdict(R"(Input {"premises": "x"} gives {"faithful": false, "error_type": ["factual misquote"],
        "error_location": "Step 1", "override": false, "analysis": "misquotes premise 2"})");
    ASSERT_TRUE(v.has_value());
    EXPECT_EQ(v->error_types, std::set<error_category>{error_category::factual_misquote});
}

TEST(ErrorCategory, NamesRoundTrip) {
    for (auto c : all_error_categories) EXPECT_EQ(error_category_from_string(to_string(c)), c);
    EXPECT_EQ(error_category_from_string("commonsense injection"), error_category::commonsense_injection);
    EXPECT_EQ(error_category_from_string("Factual_Misquote"), error_category::factual_misquote);
    EXPECT_FALSE(error_category_from_string("misquote"));
}

TEST(JudgeRationale, JamesIsMissingBranchAtStepEight) {
    auto problems = load_problems(fixture("demo/problems.jsonl"));
    stub_backend judge(fixture("demo/stub_judge.jsonl"));
    auto v = judge_rationale(find_problem(problems, "james"), fixture_trace("james_nl.txt", "james"), judge);
    EXPECT_EQ(v.problem_id, "james");
    EXPECT_FALSE(v.faithful);
    EXPECT_EQ(v.error_types, std::set<error_category>{error_category::missing_branch});
    EXPECT_EQ(v.error_location, "Step 8");
    auto reqs = judge.requests();
    ASSERT_EQ(reqs.size(), 1u);
    EXPECT_EQ(reqs[0].channel, "judge");
}

TEST(JudgeRationale, BonnieNeedsOneRetryAndHasTwoCategories) {
    auto problems = load_problems(fixture("demo/problems.jsonl"));
    stub_backend judge(fixture("demo/stub_judge.jsonl"));
    auto v = judge_rationale(find_problem(problems, "bonnie"), fixture_trace("bonnie_nl.txt", "bonnie"), judge);
    EXPECT_EQ(v.error_types,
              (std::set<error_category>{error_category::invalid_converse, error_category::missing_branch}));
    auto reqs = judge.requests();
    ASSERT_EQ(reqs.size(), 2u);
    EXPECT_EQ(reqs[0].first_sample, 0);
    EXPECT_EQ(reqs[1].first_sample, 1);
    EXPECT_EQ(reqs[0].prompt, reqs[1].prompt);
}

TEST(JudgeRationale, ProseTwiceIsUnparseable) {
    problem p;
    p.id = "prose_only";
    p.premises = "A.";
    p.conclusion = "B.";
    stub_backend judge(fixture("demo/stub_judge.jsonl"));
    auto tr = extract_trace("Step 1: guess.\n<end_of_nl_cot>\n" + render_answer_block(answer::A), modality::nl, "prose_only");
    EXPECT_THROW(judge_rationale(p, tr, judge), judge_unparseable);
    EXPECT_EQ(judge.requests().size(), 2u);
}

TEST(JudgeRationale, RejectsOtherModalitiesAndPropagatesBackendErrors) {
    problem p;
    p.id = "unknown";
    stub_backend judge;
    auto code = extract_trace("class A:\n    def f(self): pass\n<end_of_code>", modality::code, "unknown");
    EXPECT_THROW(judge_rationale(p, code, judge), usage_error);
    auto nl = extract_trace("Step 1.\n<end_of_nl_cot>", modality::nl, "unknown");
    EXPECT_THROW(judge_rationale(p, nl, judge), stub_miss);
}

TEST(Distribution, MultiLabelPercentsExceedHundred) {
    using E = error_category;
    std::vector<error_verdict> vs{verdict_of({E::missing_branch}), verdict_of({E::missing_branch, E::invalid_converse}),
                                  verdict_of({E::invalid_converse}), verdict_of({E::commonsense_injection})};
    auto d = aggregate_distribution(vs);
    EXPECT_EQ(d.cases, 4u);
    EXPECT_DOUBLE_EQ(d.percent(E::missing_branch), 50.0);
    EXPECT_DOUBLE_EQ(d.percent(E::invalid_converse), 50.0);
    EXPECT_DOUBLE_EQ(d.percent(E::commonsense_injection), 25.0);
    EXPECT_DOUBLE_EQ(d.percent(E::factual_misquote), 0.0);
    double sum = 0;
    for (auto c : all_error_categories) sum += d.percent(c);
    EXPECT_DOUBLE_EQ(sum, 125.0);
}

TEST(Distribution, SingleLabelsSumToHundred) {
    using E = error_category;
    std::vector<error_verdict> vs{verdict_of({E::missing_branch}), verdict_of({E::factual_misquote}),
                                  verdict_of({E::factual_misquote}), verdict_of({E::invalid_converse}),
                                  verdict_of({E::commonsense_injection})};
    auto d = aggregate_distribution(vs);
    double sum = 0;
    for (auto c : all_error_categories) sum += d.percent(c);
    EXPECT_DOUBLE_EQ(sum, 100.0);
    EXPECT_DOUBLE_EQ(d.percent(E::factual_misquote), 40.0);
}

TEST(Distribution, HundredVerdictsMatchHandTally) {
    // Verdict i carries category c when bit c of (i mod 16) is set; i mod 16 == 0
    // is a faithful verdict. 0..95 holds six full cycles (8 hits per bit) and
    // 96..99 adds residues 0..3, which set bit 0 twice and bit 1 twice:
    // 50, 50, 48, 48.
    std::vector<error_verdict> vs;
    for (int i = 0; i < 100; ++i) {
        error_verdict v;
        for (auto c : all_error_categories)
            if ((i % 16) >> static_cast<int>(c) & 1) v.error_types.insert(c);
        v.faithful = v.error_types.empty();
        vs.push_back(v);
    }
    auto d = aggregate_distribution(vs);
    EXPECT_EQ(d.cases, 100u);
    EXPECT_EQ(d.counts, (std::array<std::size_t, 4>{50, 50, 48, 48}));
    EXPECT_DOUBLE_EQ(d.percent(error_category::missing_branch), 50.0);
    EXPECT_DOUBLE_EQ(d.percent(error_category::factual_misquote), 48.0);

    std::reverse(vs.begin(), vs.end());
    EXPECT_EQ(aggregate_distribution(vs).counts, d.counts);
}

TEST(Distribution, FaithfulVerdictsNeverCount) {
    error_verdict odd;
    odd.faithful = true;
    odd.error_types = {error_category::missing_branch};
    auto d = aggregate_distribution(std::vector<error_verdict>{odd, verdict_of({})});
    EXPECT_EQ(d.counts, (std::array<std::size_t, 4>{}));
    EXPECT_THROW(aggregate_distribution(std::vector<error_verdict>{}), empty_input);
}

TEST(Distribution, JsonShape) {
    auto d = aggregate_distribution(std::vector<error_verdict>{verdict_of({error_category::invalid_converse})});
    auto j = to_json(d);
    EXPECT_EQ(j.at("cases"), 1);
    EXPECT_EQ(j.at("percent").at("InvalidConverse"), 100.0);
    EXPECT_EQ(j.at("count").at("MissingBranch"), 0);
}
