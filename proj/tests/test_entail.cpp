#include <gtest/gtest.h>

#include <numeric>

#include "mot/entail.hpp"
#include "test_support.hpp"

using namespace mot::entail;
using mot::answer;
using mot::testing::load_theory;

namespace {

ground_theory single_var(std::vector<prop_expr> premises) {
    ground_theory g;
    g.vars = {{0, "P"}};
    g.premises = std::move(premises);
    g.conclusion = prop_expr::variable(0);
    return g;
}

std::vector<std::string> labels(const ground_theory& g) {
    std::vector<std::string> out;
    for (const auto& v : g.vars) out.push_back(v.label);
    return out;
}

}  // namespace

TEST(Ground, UniversalBecomesConjunctionOverConstants) {
    auto th = mot::logic::parse_theory(
        "consts: a, b;\npreds: F/1, E/1;\npremise: forall x (F(x) -> E(x))\nconclusion: E(a)\n");
    auto g = ground(th);
    ASSERT_EQ(g.premises.size(), 1u);
    EXPECT_EQ(format_expr(g.premises[0], g.vars), "(F(a) -> E(a)) & (F(b) -> E(b))");
    EXPECT_EQ(labels(g), (std::vector<std::string>{"F(a)", "E(a)", "F(b)", "E(b)"}));
}

TEST(Ground, ExistentialBecomesDisjunction) {
    auto th = mot::logic::parse_theory("consts: a, b, c;\npreds: W/1;\npremise: exists x (W(x))\nconclusion: W(a)\n");
    auto g = ground(th);
    EXPECT_EQ(format_expr(g.premises[0], g.vars), "W(a) | W(b) | W(c)");
}

TEST(Ground, NestedQuantifiersAndShadowing) {
    auto th = mot::logic::parse_theory(
        "consts: a, b;\npreds: R/2;\npremise: forall x (exists y (R(x, y)))\n"
        "conclusion: forall x (forall x (R(x, x)))\n");
    auto g = ground(th);
    EXPECT_EQ(format_expr(g.premises[0], g.vars), "(R(a, a) | R(a, b)) & (R(b, a) | R(b, b))");
    EXPECT_EQ(format_expr(g.conclusion, g.vars), "R(a, a) & R(b, b) & (R(a, a) & R(b, b))");
}

TEST(Ground, ThorTheoryIsAlreadyPropositional) {
    auto th = load_theory("thor.theory");
    auto g = ground(th);
    EXPECT_EQ(g.vars.size(), 7u);
    ASSERT_EQ(g.premises.size(), th.premises.size());
    for (std::size_t i = 0; i < th.premises.size(); ++i)
        EXPECT_EQ(format_expr(g.premises[i], g.vars), mot::logic::format_formula(th.premises[i]));
    // first-occurrence order in the premises
    EXPECT_EQ(labels(g), (std::vector<std::string>{"S", "C", "H", "A", "B", "T", "U"}));
}

TEST(Ground, VarCapExceeded) {
    // 3 unary predicates over 10 constants = 30 ground atoms
    auto th = mot::logic::parse_theory(
        "consts: c0, c1, c2, c3, c4, c5, c6, c7, c8, c9;\npreds: A/1, B/1, C/1;\n"
        "premise: forall x (A(x) -> B(x))\nconclusion: exists x (C(x))\n");
    try {
        ground(th, 24);
        FAIL();
    } catch (const var_cap_exceeded& e) {
        EXPECT_EQ(e.count(), 30u);
        EXPECT_EQ(e.cap(), 24u);
    }
    EXPECT_EQ(ground(th, 30).vars.size(), 30u);
}

TEST(Ground, EmptyDomainWithQuantifier) {
    auto th = mot::logic::parse_theory("preds: P/1, T/0;\npremise: forall x (P(x))\nconclusion: T\n");
    EXPECT_THROW(ground(th), empty_domain_error);
}

TEST(EvalFormula, TruthFunctional) {
    auto P = prop_expr::variable(0), Q = prop_expr::variable(1);
    EXPECT_FALSE(eval_formula(implies(P, Q), assignment(std::vector<bool>{true, false})));
    EXPECT_TRUE(eval_formula(iff(P, Q), assignment(std::vector<bool>{false, false})));
    EXPECT_TRUE(eval_formula(!P || Q, assignment(std::vector<bool>{false, false})));
    EXPECT_FALSE(eval_formula(P && !Q, assignment(std::vector<bool>{false, false})));
}

// Second evaluator: rebuild the lifted formula and evaluate it over labels.
namespace {
bool eval_lifted(const mot::logic::formula& f, const std::map<std::string, bool>& values) {
    using namespace mot::logic;
    return std::visit(overloaded{
                          [&](const atom& a) { return values.at(a.predicate); },
                          [&](const negation& n) { return !eval_lifted(n.operand, values); },
                          [&](const binary& b) {
                              bool l = eval_lifted(b.lhs, values), r = eval_lifted(b.rhs, values);
                              switch (b.op) {
                                  case connective::conj: return l && r;
                                  case connective::disj: return l || r;
                                  case connective::implies: return !l || r;
                                  case connective::iff: return l == r;
                              }
                              return false;
                          },
                          [&](const quantified&) -> bool { throw std::logic_error("quantifier"); },
                      },
                      f.get().value);
}
}  // namespace

TEST(EvalFormula, AgreesWithIndependentEvaluator) {
    mot::testing::ground_theory_generator gen(7);
    std::mt19937_64 rng(99);
    for (int i = 0; i < 10000; ++i) {
        std::size_t n = 1 + rng() % 8;
        std::vector<prop_var> vars;
        for (std::size_t v = 0; v < n; ++v) vars.push_back({v, "p" + std::to_string(v)});
        auto e = gen.gen(n, 4);
        assignment a(n);
        std::map<std::string, bool> values;
        for (std::size_t v = 0; v < n; ++v) {
            bool b = rng() & 1;
            a.set(v, b);
            values["p" + std::to_string(v)] = b;
        }
        ASSERT_EQ(eval_formula(e, a), eval_lifted(to_formula(e, vars), values));
    }
}

TEST(SolveTruthTable, ThorWithAssumptionHasSingleRow) {
    auto g = ground(load_theory("thor_assume_t.theory"));
    auto r = solve_truth_table(g);
    EXPECT_EQ(r.outcome, verdict::true_);
    EXPECT_EQ(verdict_to_option(r.outcome).option, answer::A);
    ASSERT_EQ(r.surviving_count, 1u);
    ASSERT_EQ(r.sample_rows.size(), 1u);
    // row T, H, A, B, ~C, S, U
    std::map<std::string, bool> expected{{"T", true},  {"H", true}, {"A", true}, {"B", true},
                                         {"C", false}, {"S", true}, {"U", true}};
    for (const auto& v : g.vars) EXPECT_EQ(r.sample_rows[0][v.id], expected.at(v.label)) << v.label;
}

TEST(SolveTruthTable, NoPremisesIsUncertain) {
    auto r = solve_truth_table(single_var({}));
    EXPECT_EQ(r.outcome, verdict::uncertain);
    EXPECT_EQ(r.surviving_count, 2u);
}

TEST(SolveTruthTable, ContradictoryPremisesAreInconsistent) {
    auto P = prop_expr::variable(0);
    auto r = solve_truth_table(single_var({P, !P}));
    EXPECT_EQ(r.outcome, verdict::inconsistent);
    EXPECT_EQ(r.surviving_count, 0u);
    auto opt = verdict_to_option(r.outcome);
    EXPECT_EQ(opt.option, answer::C);
    EXPECT_TRUE(opt.warning);
}

TEST(SolveTruthTable, RespectsVarCap) {
    mot::testing::ground_theory_generator gen(3);
    auto g = gen.next(12, 2);
    while (g.vars.size() < 5) g = gen.next(12, 2);
    EXPECT_THROW(solve_truth_table(g, {4, 64}), var_cap_exceeded);
}

TEST(SolveTruthTable, SampleRowsAreCapped) {
    ground_theory g;
    for (std::size_t i = 0; i < 10; ++i) g.vars.push_back({i, "v" + std::to_string(i)});
    g.conclusion = prop_expr::variable(0);
    auto r = solve_truth_table(g, {24, 5});
    EXPECT_EQ(r.surviving_count, 1024u);
    EXPECT_EQ(r.sample_rows.size(), 5u);
    EXPECT_EQ(r.outcome, verdict::uncertain);
}

TEST(BruteForceOracle, WorkedExampleTheories) {
    EXPECT_EQ(brute_force_oracle(ground(load_theory("fir_trees.theory"))).outcome, verdict::uncertain);
    EXPECT_EQ(brute_force_oracle(ground(load_theory("black_mirror.theory"))).outcome, verdict::false_);
    EXPECT_EQ(brute_force_oracle(ground(load_theory("black_mirror_fol.theory"))).outcome, verdict::false_);
}

TEST(BruteForceOracle, RejectsMoreThanTwentyVars) {
    ground_theory g;
    for (std::size_t i = 0; i < 21; ++i) g.vars.push_back({i, "v" + std::to_string(i)});
    g.conclusion = prop_expr::variable(0);
    EXPECT_THROW(brute_force_oracle(g), var_cap_exceeded);
}

TEST(BruteForceOracle, MatchesPrunedSearch) {
    mot::testing::ground_theory_generator gen(1234);
    for (int i = 0; i < 500; ++i) {
        auto g = gen.next(12, 8);
        auto fast = solve_truth_table(g);
        auto slow = brute_force_oracle(g);
        ASSERT_EQ(fast.outcome, slow.outcome);
        ASSERT_EQ(fast.surviving_count, slow.surviving_count);
        ASSERT_EQ(fast.satisfying_count, slow.satisfying_count);
        ASSERT_EQ(fast.sample_rows, slow.sample_rows);
    }
}

TEST(VerdictToOption, Mapping) {
    EXPECT_EQ(verdict_to_option(verdict::true_).option, answer::A);
    EXPECT_FALSE(verdict_to_option(verdict::true_).warning);
    EXPECT_EQ(verdict_to_option(verdict::false_).option, answer::B);
    EXPECT_EQ(verdict_to_option(verdict::uncertain).option, answer::C);
    EXPECT_FALSE(verdict_to_option(verdict::uncertain).warning);
    EXPECT_EQ(verdict_to_option(verdict::inconsistent).option, answer::C);
    EXPECT_TRUE(verdict_to_option(verdict::inconsistent).warning);
}

// Every pruned partial row has no completion that satisfies the violated premise.
TEST(Properties, PruningIsSound) {
    mot::testing::ground_theory_generator gen(555);
    std::size_t checked = 0;
    for (int i = 0; i < 200; ++i) {
        auto g = gen.next(10, 6);
        solve_truth_table(g, {}, [&](std::span<const truth> row, std::size_t depth, std::size_t premise) {
            std::size_t free = g.vars.size() - depth;
            for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << free); ++bits) {
                assignment a(g.vars.size());
                for (std::size_t v = 0; v < depth; ++v) a.set(v, row[v] == truth::t);
                for (std::size_t v = 0; v < free; ++v) a.set(depth + v, (bits >> v) & 1u);
                ASSERT_FALSE(eval_formula(g.premises[premise], a));
            }
            ++checked;
        });
    }
    EXPECT_GT(checked, 100u);
}

TEST(Properties, VerdictInvariantUnderPremiseReordering) {
    mot::testing::ground_theory_generator gen(77);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        auto g = gen.next(10, 6);
        auto base = solve_truth_table(g);
        auto shuffled = g;
        std::shuffle(shuffled.premises.begin(), shuffled.premises.end(), rng);
        for (auto& v : shuffled.vars) v.label = "renamed_" + v.label;
        auto r = solve_truth_table(shuffled);
        ASSERT_EQ(r.outcome, base.outcome);
        ASSERT_EQ(r.surviving_count, base.surviving_count);
    }
}

TEST(Properties, VerdictIndependentOfVariableOrder) {
    mot::testing::ground_theory_generator gen(88);
    std::mt19937_64 rng(6);
    for (int i = 0; i < 200; ++i) {
        auto g = gen.next(10, 6);
        std::vector<std::uint32_t> perm(g.vars.size());
        std::iota(perm.begin(), perm.end(), 0u);
        std::shuffle(perm.begin(), perm.end(), rng);
        auto relabel = [&](const prop_expr& e) {
            auto rec = [&](auto&& self, std::uint32_t idx) -> prop_expr {
                const auto& n = e.nodes()[idx];
                switch (n.kind) {
                    case prop_expr::op::var: return prop_expr::variable(perm[n.a]);
                    case prop_expr::op::negate: return !self(self, n.a);
                    default: return prop_expr::combine(n.kind, self(self, n.a), self(self, n.b));
                }
            };
            return rec(rec, e.root());
        };
        auto permuted = g;
        for (auto& p : permuted.premises) p = relabel(p);
        permuted.conclusion = relabel(g.conclusion);
        auto a = solve_truth_table(g);
        auto b = solve_truth_table(permuted);
        ASSERT_EQ(a.outcome, b.outcome);
        ASSERT_EQ(a.surviving_count, b.surviving_count);
        ASSERT_EQ(a.satisfying_count, b.satisfying_count);
    }
}

TEST(Properties, ConclusionNegationDuality) {
    mot::testing::ground_theory_generator gen(99);
    for (int i = 0; i < 300; ++i) {
        auto g = gen.next(10, 6);
        auto base = solve_truth_table(g).outcome;
        auto negated = g;
        negated.conclusion = !g.conclusion;
        auto flipped = solve_truth_table(negated).outcome;
        switch (base) {
            case verdict::true_: ASSERT_EQ(flipped, verdict::false_); break;
            case verdict::false_: ASSERT_EQ(flipped, verdict::true_); break;
            case verdict::uncertain: ASSERT_EQ(flipped, verdict::uncertain); break;
            case verdict::inconsistent: ASSERT_EQ(flipped, verdict::inconsistent); break;
        }
    }
}

TEST(Properties, VerdictMatchesCounts) {
    mot::testing::ground_theory_generator gen(4242);
    for (int i = 0; i < 300; ++i) {
        auto r = solve_truth_table(gen.next(10, 8));
        switch (r.outcome) {
            case verdict::true_: ASSERT_TRUE(r.surviving_count > 0 && r.satisfying_count == r.surviving_count); break;
            case verdict::false_: ASSERT_TRUE(r.surviving_count > 0 && r.satisfying_count == 0); break;
            case verdict::uncertain:
                ASSERT_TRUE(r.satisfying_count > 0 && r.satisfying_count < r.surviving_count);
                break;
            case verdict::inconsistent: ASSERT_EQ(r.surviving_count, 0u); break;
        }
    }
}

TEST(PaperFixtures, EntailmentVerdicts) {
    struct expectation {
        const char* file;
        verdict v;
        answer option;
    };
    for (auto [file, v, option] : {expectation{"thor.theory", verdict::true_, answer::A},
                                   expectation{"thor_assume_t.theory", verdict::true_, answer::A},
                                   expectation{"fir_trees.theory", verdict::uncertain, answer::C},
                                   expectation{"black_mirror.theory", verdict::false_, answer::B},
                                   expectation{"black_mirror_fol.theory", verdict::false_, answer::B},
                                   expectation{"rock.theory", verdict::uncertain, answer::C},
                                   expectation{"james.theory", verdict::uncertain, answer::C},
                                   expectation{"bonnie.theory", verdict::uncertain, answer::C},
                                   expectation{"max_designs.theory", verdict::true_, answer::A},
                                   expectation{"inconsistent.theory", verdict::inconsistent, answer::C}}) {
        auto g = ground(load_theory(file));
        auto r = solve_truth_table(g);
        EXPECT_EQ(r.outcome, v) << file;
        EXPECT_EQ(verdict_to_option(r.outcome).option, option) << file;
        EXPECT_EQ(brute_force_oracle(g).outcome, v) << file;
    }
}
