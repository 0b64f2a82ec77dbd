#pragma once

// Grounding of finite-domain first-order theories into propositional form,
// and the three-valued entailment decision over the pruned truth table.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mot/answer.hpp"
#include "mot/errors.hpp"
#include "mot/logic.hpp"

namespace mot::entail {

struct prop_var {
    std::size_t id = 0;
    std::string label;

    bool operator==(const prop_var&) const = default;
};

// Propositional formula stored as a flat node array; the root is the last node.
class prop_expr {
public:
    enum class op : std::uint8_t { var, negate, conj, disj, implies, iff };

    struct node {
        op kind;
        std::uint32_t a;  // var id for `var`, otherwise index of the first operand
        std::uint32_t b;  // index of the second operand for binary nodes
    };

    static prop_expr variable(std::size_t id) {
        prop_expr e;
        e.nodes_.push_back({op::var, static_cast<std::uint32_t>(id), 0});
        return e;
    }

    static prop_expr negation(const prop_expr& operand) {
        prop_expr e;
        e.append(operand);
        e.nodes_.push_back({op::negate, static_cast<std::uint32_t>(e.nodes_.size() - 1), 0});
        return e;
    }

    static prop_expr combine(op kind, const prop_expr& lhs, const prop_expr& rhs) {
        prop_expr e;
        e.nodes_.reserve(lhs.nodes_.size() + rhs.nodes_.size() + 1);
        e.append(lhs);
        auto left_root = static_cast<std::uint32_t>(e.nodes_.size() - 1);
        e.append(rhs);
        auto right_root = static_cast<std::uint32_t>(e.nodes_.size() - 1);
        e.nodes_.push_back({kind, left_root, right_root});
        return e;
    }

    std::span<const node> nodes() const { return nodes_; }
    bool empty() const { return nodes_.empty(); }
    std::uint32_t root() const { return static_cast<std::uint32_t>(nodes_.size() - 1); }

    // Sorted, deduplicated ids of the variables that occur in the formula.
    std::vector<std::size_t> variables() const {
        std::vector<std::size_t> out;
        for (const auto& n : nodes_)
            if (n.kind == op::var) out.push_back(n.a);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    bool operator==(const prop_expr& other) const {
        if (nodes_.size() != other.nodes_.size()) return false;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const auto& x = nodes_[i];
            const auto& y = other.nodes_[i];
            if (x.kind != y.kind || x.a != y.a || (x.kind != op::var && x.kind != op::negate && x.b != y.b))
                return false;
        }
        return true;
    }

private:
    void append(const prop_expr& other) {
        auto offset = static_cast<std::uint32_t>(nodes_.size());
        for (auto n : other.nodes_) {
            if (n.kind != op::var) n.a += offset;
            if (n.kind != op::var && n.kind != op::negate) n.b += offset;
            nodes_.push_back(n);
        }
    }

    std::vector<node> nodes_;
};

inline prop_expr operator!(const prop_expr& e) { return prop_expr::negation(e); }
inline prop_expr operator&&(const prop_expr& l, const prop_expr& r) {
    return prop_expr::combine(prop_expr::op::conj, l, r);
}
inline prop_expr operator||(const prop_expr& l, const prop_expr& r) {
    return prop_expr::combine(prop_expr::op::disj, l, r);
}
inline prop_expr implies(const prop_expr& l, const prop_expr& r) {
    return prop_expr::combine(prop_expr::op::implies, l, r);
}
inline prop_expr iff(const prop_expr& l, const prop_expr& r) { return prop_expr::combine(prop_expr::op::iff, l, r); }

struct ground_theory {
    std::vector<prop_var> vars;
    std::vector<prop_expr> premises;
    prop_expr conclusion;
};

class assignment {
public:
    assignment() = default;
    explicit assignment(std::size_t n) : values_(n, false) {}
    explicit assignment(std::vector<bool> values) : values_(std::move(values)) {}

    bool operator[](std::size_t id) const { return values_[id]; }
    void set(std::size_t id, bool v) { values_[id] = v; }
    std::size_t size() const { return values_.size(); }

    bool operator==(const assignment&) const = default;

private:
    std::vector<bool> values_;
};

enum class verdict { true_, false_, uncertain, inconsistent };

inline const char* to_string(verdict v) {
    switch (v) {
        case verdict::true_: return "True";
        case verdict::false_: return "False";
        case verdict::uncertain: return "Uncertain";
        case verdict::inconsistent: return "Inconsistent";
    }
    return "?";
}

struct solve_stats {
    std::uint64_t nodes_visited = 0;
    std::uint64_t pruned_partial_count = 0;
};

struct entailment_result {
    verdict outcome = verdict::inconsistent;
    std::uint64_t surviving_count = 0;
    std::uint64_t satisfying_count = 0;  // surviving rows in which the conclusion holds
    std::vector<assignment> sample_rows;
    std::size_t vars_count = 0;
    solve_stats stats;
};

struct solve_limits {
    std::size_t var_cap = 24;
    std::size_t row_sample_cap = 64;
};

inline constexpr std::size_t oracle_var_cap = 20;

class var_cap_exceeded : public data_error {
public:
    var_cap_exceeded(std::size_t count, std::size_t cap)
        : data_error("VarCapExceeded: " + std::to_string(count) + " propositional variables exceed the cap of " +
                     std::to_string(cap)),
          count_(count),
          cap_(cap) {}

    std::size_t count() const noexcept { return count_; }
    std::size_t cap() const noexcept { return cap_; }

private:
    std::size_t count_;
    std::size_t cap_;
};

class empty_domain_error : public data_error {
public:
    empty_domain_error() : data_error("EmptyDomainWithQuantifier: quantifiers need at least one declared constant") {}
};

namespace detail {

struct grounder {
    const logic::declarations& decls;
    std::unordered_map<std::string, std::size_t> ids;
    std::vector<prop_var> vars;
    std::vector<std::pair<std::string, std::string>> env;  // variable -> constant, innermost last

    const std::string& lookup(const logic::term& t) const {
        if (t.kind == logic::term_kind::constant) return t.name;
        for (auto it = env.rbegin(); it != env.rend(); ++it)
            if (it->first == t.name) return it->second;
        throw data_error("UnboundVariable: '" + t.name + "' has no binding during grounding");
    }

    std::string label(const logic::atom& a) const {
        std::string out = a.predicate;
        if (a.args.empty()) return out;
        out += '(';
        for (std::size_t i = 0; i < a.args.size(); ++i) {
            if (i) out += ", ";
            out += lookup(a.args[i]);
        }
        out += ')';
        return out;
    }

    // Counts distinct ground atoms without expanding the formula; stops early once
    // `limit` is passed.
    void count_atoms(const logic::formula& f, std::set<std::string>& seen, std::size_t limit) {
        if (seen.size() > limit) return;
        std::visit(logic::overloaded{
                       [&](const logic::atom& a) {
                           std::vector<std::string> free;
                           for (const auto& t : a.args)
                               if (t.kind == logic::term_kind::variable &&
                                   std::find(free.begin(), free.end(), t.name) == free.end())
                                   free.push_back(t.name);
                           std::vector<std::size_t> digit(free.size(), 0);
                           auto saved = env.size();
                           while (seen.size() <= limit) {
                               for (std::size_t i = 0; i < free.size(); ++i)
                                   env.emplace_back(free[i], decls.constants[digit[i]]);
                               seen.insert(label(a));
                               env.resize(saved);
                               std::size_t i = 0;
                               for (; i < digit.size(); ++i) {
                                   if (++digit[i] < decls.constants.size()) break;
                                   digit[i] = 0;
                               }
                               if (i == digit.size()) break;
                           }
                       },
                       [&](const logic::negation& n) { count_atoms(n.operand, seen, limit); },
                       [&](const logic::binary& b) {
                           count_atoms(b.lhs, seen, limit);
                           count_atoms(b.rhs, seen, limit);
                       },
                       [&](const logic::quantified& q) { count_atoms(q.body, seen, limit); },
                   },
                   f.get().value);
    }

    prop_expr expand(const logic::formula& f) {
        return std::visit(logic::overloaded{
                              [&](const logic::atom& a) {
                                  std::string l = label(a);
                                  auto [it, inserted] = ids.try_emplace(l, vars.size());
                                  if (inserted) vars.push_back({it->second, l});
                                  return prop_expr::variable(it->second);
                              },
                              [&](const logic::negation& n) { return !expand(n.operand); },
                              [&](const logic::binary& b) {
                                  prop_expr l = expand(b.lhs);
                                  prop_expr r = expand(b.rhs);
                                  switch (b.op) {
                                      case logic::connective::conj: return l && r;
                                      case logic::connective::disj: return l || r;
                                      case logic::connective::implies: return implies(l, r);
                                      case logic::connective::iff: return iff(l, r);
                                  }
                                  return l;
                              },
                              [&](const logic::quantified& q) {
                                  prop_expr acc;
                                  for (const auto& c : decls.constants) {
                                      env.emplace_back(q.variable, c);
                                      prop_expr inst = expand(q.body);
                                      env.pop_back();
                                      if (acc.empty())
                                          acc = std::move(inst);
                                      else
                                          acc = q.q == logic::quantifier::forall ? (acc && inst) : (acc || inst);
                                  }
                                  return acc;
                              },
                          },
                          f.get().value);
    }
};

}  // namespace detail

// Replaces each universal by a conjunction and each existential by a disjunction
// over the declared constants, then numbers ground atoms by first occurrence
// (premises in order, then the conclusion).
inline ground_theory ground(const logic::theory& th, std::size_t var_cap = solve_limits{}.var_cap) {
    std::vector<const logic::formula*> all;
    for (const auto& p : th.premises) all.push_back(&p);
    all.push_back(&th.conclusion);

    bool quantified = false;
    for (const auto* f : all) {
        if (f->empty()) throw data_error("theory has an empty formula");
        if (auto fv = logic::free_variables(*f); !fv.empty())
            throw data_error("UnboundVariable: '" + *fv.begin() + "' is free in a top-level formula");
        quantified = quantified || logic::has_quantifier(*f);
    }
    if (quantified && th.decls.constants.empty()) throw empty_domain_error();

    detail::grounder g{th.decls, {}, {}, {}};
    std::set<std::string> seen;
    constexpr std::size_t count_limit = 1u << 20;
    for (const auto* f : all) g.count_atoms(*f, seen, count_limit);
    if (seen.size() > var_cap) throw var_cap_exceeded(seen.size(), var_cap);

    ground_theory out;
    for (const auto& p : th.premises) out.premises.push_back(g.expand(p));
    out.conclusion = g.expand(th.conclusion);
    out.vars = std::move(g.vars);
    return out;
}

inline bool eval_formula(const prop_expr& f, const assignment& a) {
    auto nodes = f.nodes();
    auto rec = [&](auto&& self, std::uint32_t i) -> bool {
        const auto& n = nodes[i];
        switch (n.kind) {
            case prop_expr::op::var: return a[n.a];
            case prop_expr::op::negate: return !self(self, n.a);
            case prop_expr::op::conj: return self(self, n.a) && self(self, n.b);
            case prop_expr::op::disj: return self(self, n.a) || self(self, n.b);
            case prop_expr::op::implies: return !self(self, n.a) || self(self, n.b);
            case prop_expr::op::iff: return self(self, n.a) == self(self, n.b);
        }
        return false;
    };
    return rec(rec, f.root());
}

// Kleene strong three-valued logic over partial rows.
enum class truth : std::uint8_t { f, t, unknown };

inline truth eval_partial(const prop_expr& f, std::span<const truth> row) {
    auto nodes = f.nodes();
    auto rec = [&](auto&& self, std::uint32_t i) -> truth {
        const auto& n = nodes[i];
        switch (n.kind) {
            case prop_expr::op::var: return row[n.a];
            case prop_expr::op::negate: {
                truth v = self(self, n.a);
                return v == truth::unknown ? v : (v == truth::t ? truth::f : truth::t);
            }
            case prop_expr::op::conj: {
                truth l = self(self, n.a);
                if (l == truth::f) return truth::f;
                truth r = self(self, n.b);
                if (r == truth::f) return truth::f;
                return (l == truth::t && r == truth::t) ? truth::t : truth::unknown;
            }
            case prop_expr::op::disj: {
                truth l = self(self, n.a);
                if (l == truth::t) return truth::t;
                truth r = self(self, n.b);
                if (r == truth::t) return truth::t;
                return (l == truth::f && r == truth::f) ? truth::f : truth::unknown;
            }
            case prop_expr::op::implies: {
                truth l = self(self, n.a);
                if (l == truth::f) return truth::t;
                truth r = self(self, n.b);
                if (r == truth::t) return truth::t;
                return (l == truth::t && r == truth::f) ? truth::f : truth::unknown;
            }
            case prop_expr::op::iff: {
                truth l = self(self, n.a);
                truth r = self(self, n.b);
                if (l == truth::unknown || r == truth::unknown) return truth::unknown;
                return l == r ? truth::t : truth::f;
            }
        }
        return truth::unknown;
    };
    return rec(rec, f.root());
}

inline verdict decide(std::uint64_t surviving, std::uint64_t satisfying) {
    if (surviving == 0) return verdict::inconsistent;
    if (satisfying == surviving) return verdict::true_;
    if (satisfying == 0) return verdict::false_;
    return verdict::uncertain;
}

struct no_observer {
    void operator()(std::span<const truth>, std::size_t, std::size_t) const noexcept {}
};

// Depth-first walk of the assignment tree in variable-id order (false branch
// first). After each assignment, the premises mentioning that variable are
// evaluated on the partial row; a premise that is already false prunes the
// subtree. `observer(partial_row, depth, premise_index)` is called for every
// pruned node.
template <class Observer = no_observer>
entailment_result solve_truth_table(const ground_theory& g, solve_limits limits = {}, Observer&& observer = {}) {
    const std::size_t n = g.vars.size();
    if (n > limits.var_cap) throw var_cap_exceeded(n, limits.var_cap);

    std::vector<std::vector<std::size_t>> watching(n);
    for (std::size_t p = 0; p < g.premises.size(); ++p)
        for (auto v : g.premises[p].variables()) {
            if (v >= n) throw data_error("premise references undeclared propositional variable");
            watching[v].push_back(p);
        }

    entailment_result result;
    result.vars_count = n;
    std::vector<truth> row(n, truth::unknown);

    auto leaf = [&] {
        assignment a(n);
        for (std::size_t i = 0; i < n; ++i) a.set(i, row[i] == truth::t);
        ++result.surviving_count;
        if (eval_formula(g.conclusion, a)) ++result.satisfying_count;
        if (result.sample_rows.size() < limits.row_sample_cap) result.sample_rows.push_back(std::move(a));
    };

    auto descend = [&](auto&& self, std::size_t depth) -> void {
        ++result.stats.nodes_visited;
        if (depth == n) {
            leaf();
            return;
        }
        for (truth value : {truth::f, truth::t}) {
            row[depth] = value;
            bool violated = false;
            for (auto p : watching[depth]) {
                if (eval_partial(g.premises[p], row) == truth::f) {
                    ++result.stats.pruned_partial_count;
                    observer(std::span<const truth>(row), depth + 1, p);
                    violated = true;
                    break;
                }
            }
            if (!violated) self(self, depth + 1);
        }
        row[depth] = truth::unknown;
    };
    descend(descend, 0);

    result.outcome = decide(result.surviving_count, result.satisfying_count);
    return result;
}

// Plain enumeration of all 2^n rows, row r assigning bit (n-1-i) of r to
// variable i so rows come out in the same order as the pruned search.
inline entailment_result brute_force_oracle(const ground_theory& g,
                                            std::size_t row_sample_cap = solve_limits{}.row_sample_cap) {
    const std::size_t n = g.vars.size();
    if (n > oracle_var_cap) throw var_cap_exceeded(n, oracle_var_cap);
    entailment_result result;
    result.vars_count = n;
    const std::uint64_t rows = std::uint64_t{1} << n;
    for (std::uint64_t r = 0; r < rows; ++r) {
        assignment a(n);
        for (std::size_t i = 0; i < n; ++i) a.set(i, (r >> (n - 1 - i)) & 1u);
        ++result.stats.nodes_visited;
        bool survives = true;
        for (const auto& p : g.premises) {
            if (!eval_formula(p, a)) {
                survives = false;
                break;
            }
        }
        if (!survives) continue;
        ++result.surviving_count;
        if (eval_formula(g.conclusion, a)) ++result.satisfying_count;
        if (result.sample_rows.size() < row_sample_cap) result.sample_rows.push_back(std::move(a));
    }
    result.outcome = decide(result.surviving_count, result.satisfying_count);
    return result;
}

struct option_choice {
    answer option;
    bool warning = false;  // set when the premises admit no row at all
};

inline option_choice verdict_to_option(verdict v) {
    switch (v) {
        case verdict::true_: return {answer::A, false};
        case verdict::false_: return {answer::B, false};
        case verdict::uncertain: return {answer::C, false};
        case verdict::inconsistent: return {answer::C, true};
    }
    return {answer::C, true};
}

inline logic::formula to_formula(const prop_expr& e, std::span<const prop_var> vars) {
    auto nodes = e.nodes();
    auto rec = [&](auto&& self, std::uint32_t i) -> logic::formula {
        const auto& n = nodes[i];
        switch (n.kind) {
            case prop_expr::op::var: return logic::make_atom(vars[n.a].label);
            case prop_expr::op::negate: return logic::make_not(self(self, n.a));
            case prop_expr::op::conj: return logic::make_and(self(self, n.a), self(self, n.b));
            case prop_expr::op::disj: return logic::make_or(self(self, n.a), self(self, n.b));
            case prop_expr::op::implies: return logic::make_implies(self(self, n.a), self(self, n.b));
            case prop_expr::op::iff: return logic::make_iff(self(self, n.a), self(self, n.b));
        }
        return {};
    };
    return rec(rec, e.root());
}

inline std::string format_expr(const prop_expr& e, std::span<const prop_var> vars) {
    return logic::format_formula(to_formula(e, vars));
}

}  // namespace mot::entail
