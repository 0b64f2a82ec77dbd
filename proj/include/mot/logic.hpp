#pragma once

// First-order formulas over a finite constant domain: the AST, a recursive
// descent parser for the textual syntax, a minimal-parenthesis printer, and
// the theory file reader.
//
//   formula   := iff
//   iff       := implies ('<->' implies)*          left-associative
//   implies   := or ('->' implies)?                right-associative
//   or        := and ('|' and)*
//   and       := unary ('&' unary)*
//   unary     := '~' unary | quant | primary
//   quant     := ('forall' | 'exists') ident '(' formula ')'
//   primary   := '(' formula ')' | ident [ '(' ident (',' ident)* ')' ]

#include <cctype>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "mot/errors.hpp"

namespace mot::logic {

enum class term_kind { constant, variable };

struct term {
    term_kind kind = term_kind::constant;
    std::string name;

    bool operator==(const term&) const = default;
};

enum class connective { conj, disj, implies, iff };
enum class quantifier { forall, exists };

struct node;

// Immutable, structurally shared formula handle.
class formula {
public:
    formula() = default;
    explicit formula(std::shared_ptr<const node> n) : node_(std::move(n)) {}

    const node& get() const { return *node_; }
    bool empty() const noexcept { return node_ == nullptr; }

    friend bool operator==(const formula& a, const formula& b);

private:
    std::shared_ptr<const node> node_;
};

struct atom {
    std::string predicate;
    std::vector<term> args;

    bool operator==(const atom&) const = default;
};

struct negation {
    formula operand;

    bool operator==(const negation&) const = default;
};

struct binary {
    connective op = connective::conj;
    formula lhs;
    formula rhs;

    bool operator==(const binary&) const = default;
};

struct quantified {
    quantifier q = quantifier::forall;
    std::string variable;
    formula body;

    bool operator==(const quantified&) const = default;
};

struct node {
    std::variant<atom, negation, binary, quantified> value;
};

inline bool operator==(const formula& a, const formula& b) {
    if (a.node_ == b.node_) return true;
    if (!a.node_ || !b.node_) return false;
    return a.node_->value == b.node_->value;
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline formula make_atom(std::string predicate, std::vector<term> args = {}) {
    return formula(std::make_shared<const node>(node{atom{std::move(predicate), std::move(args)}}));
}
inline formula make_not(formula f) {
    return formula(std::make_shared<const node>(node{negation{std::move(f)}}));
}
inline formula make_binary(connective op, formula l, formula r) {
    return formula(std::make_shared<const node>(node{binary{op, std::move(l), std::move(r)}}));
}
inline formula make_and(formula l, formula r) { return make_binary(connective::conj, std::move(l), std::move(r)); }
inline formula make_or(formula l, formula r) { return make_binary(connective::disj, std::move(l), std::move(r)); }
inline formula make_implies(formula l, formula r) {
    return make_binary(connective::implies, std::move(l), std::move(r));
}
inline formula make_iff(formula l, formula r) { return make_binary(connective::iff, std::move(l), std::move(r)); }
inline formula make_quantified(quantifier q, std::string var, formula body) {
    return formula(std::make_shared<const node>(node{quantified{q, std::move(var), std::move(body)}}));
}
inline formula make_forall(std::string var, formula body) {
    return make_quantified(quantifier::forall, std::move(var), std::move(body));
}
inline formula make_exists(std::string var, formula body) {
    return make_quantified(quantifier::exists, std::move(var), std::move(body));
}
inline term constant(std::string name) { return {term_kind::constant, std::move(name)}; }
inline term variable(std::string name) { return {term_kind::variable, std::move(name)}; }

struct predicate_decl {
    std::string name;
    int arity = 0;

    bool operator==(const predicate_decl&) const = default;
};

struct declarations {
    std::vector<std::string> constants;
    std::vector<predicate_decl> predicates;

    bool has_constant(std::string_view name) const {
        for (const auto& c : constants)
            if (c == name) return true;
        return false;
    }
    std::optional<int> arity_of(std::string_view name) const {
        for (const auto& p : predicates)
            if (p.name == name) return p.arity;
        return std::nullopt;
    }
};

struct theory {
    declarations decls;
    std::vector<formula> premises;
    formula conclusion;
};

enum class parse_error_kind { syntax, arity_mismatch, unbound_variable, undeclared_symbol, missing_section };

inline const char* to_string(parse_error_kind k) {
    switch (k) {
        case parse_error_kind::syntax: return "SyntaxError";
        case parse_error_kind::arity_mismatch: return "ArityMismatch";
        case parse_error_kind::unbound_variable: return "UnboundVariable";
        case parse_error_kind::undeclared_symbol: return "UndeclaredSymbol";
        case parse_error_kind::missing_section: return "MissingSection";
    }
    return "ParseError";
}

class parse_error : public data_error {
public:
    parse_error(parse_error_kind kind, std::string detail, std::size_t position, std::string symbol = {},
                std::size_t line = 0)
        : data_error(render(kind, detail, position, line)),
          kind_(kind),
          detail_(std::move(detail)),
          symbol_(std::move(symbol)),
          position_(position),
          line_(line) {}

    parse_error_kind kind() const noexcept { return kind_; }
    const std::string& detail() const noexcept { return detail_; }
    const std::string& symbol() const noexcept { return symbol_; }
    // Byte offset into the formula text (or into the line, for theory files).
    std::size_t position() const noexcept { return position_; }
    // 1-based line in a theory file; 0 when parsing a bare formula.
    std::size_t line() const noexcept { return line_; }

    parse_error at_line(std::size_t line) const { return {kind_, detail_, position_, symbol_, line}; }

private:
    static std::string render(parse_error_kind kind, const std::string& detail, std::size_t pos, std::size_t line) {
        std::string out = to_string(kind);
        if (line != 0) out += " at line " + std::to_string(line);
        out += " (offset " + std::to_string(pos) + "): " + detail;
        return out;
    }

    parse_error_kind kind_;
    std::string detail_;
    std::string symbol_;
    std::size_t position_;
    std::size_t line_;
};

namespace detail {

enum class tok { ident, lparen, rparen, comma, tilde, amp, bar, arrow, darrow, kw_forall, kw_exists, end };

struct token {
    tok kind;
    std::string text;
    std::size_t pos;
};

inline bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

inline std::vector<token> tokenize(std::string_view s) {
    std::vector<token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        std::size_t start = i;
        if (ident_start(c)) {
            while (i < s.size() && ident_char(s[i])) ++i;
            std::string word(s.substr(start, i - start));
            tok k = word == "forall" ? tok::kw_forall : word == "exists" ? tok::kw_exists : tok::ident;
            out.push_back({k, std::move(word), start});
            continue;
        }
        switch (c) {
            case '(': out.push_back({tok::lparen, "(", start}); ++i; continue;
            case ')': out.push_back({tok::rparen, ")", start}); ++i; continue;
            case ',': out.push_back({tok::comma, ",", start}); ++i; continue;
            case '~': out.push_back({tok::tilde, "~", start}); ++i; continue;
            case '&': out.push_back({tok::amp, "&", start}); ++i; continue;
            case '|': out.push_back({tok::bar, "|", start}); ++i; continue;
            default: break;
        }
        if (s.substr(i, 3) == "<->") {
            out.push_back({tok::darrow, "<->", start});
            i += 3;
            continue;
        }
        if (s.substr(i, 2) == "->") {
            out.push_back({tok::arrow, "->", start});
            i += 2;
            continue;
        }
        throw parse_error(parse_error_kind::syntax, std::string("unexpected character '") + c + "'", start);
    }
    out.push_back({tok::end, "", s.size()});
    return out;
}

class parser {
public:
    parser(std::string_view text, const declarations& decls) : tokens_(tokenize(text)), decls_(decls) {}

    formula parse() {
        formula f = parse_iff();
        if (peek().kind != tok::end) fail("unexpected '" + peek().text + "' after formula", peek().pos);
        if (unresolved_) {
            const auto& [name, pos] = *unresolved_;
            if (quantified_names_.count(name))
                throw parse_error(parse_error_kind::unbound_variable,
                                  "variable '" + name + "' is used outside the scope of its quantifier", pos, name);
            throw parse_error(parse_error_kind::undeclared_symbol, "'" + name + "' is not a declared constant", pos,
                              name);
        }
        return f;
    }

private:
    const token& peek() const { return tokens_[index_]; }
    const token& advance() { return tokens_[index_++]; }

    [[noreturn]] static void fail(const std::string& what, std::size_t pos) {
        throw parse_error(parse_error_kind::syntax, what, pos);
    }

    const token& expect(tok kind, const char* what) {
        if (peek().kind != kind) {
            std::string found = peek().kind == tok::end ? "end of input" : "'" + peek().text + "'";
            fail(std::string("expected ") + what + ", found " + found, peek().pos);
        }
        return advance();
    }

    formula parse_iff() {
        formula lhs = parse_implies();
        while (peek().kind == tok::darrow) {
            advance();
            lhs = make_iff(std::move(lhs), parse_implies());
        }
        return lhs;
    }

    formula parse_implies() {
        formula lhs = parse_or();
        if (peek().kind == tok::arrow) {
            advance();
            return make_implies(std::move(lhs), parse_implies());
        }
        return lhs;
    }

    formula parse_or() {
        formula lhs = parse_and();
        while (peek().kind == tok::bar) {
            advance();
            lhs = make_or(std::move(lhs), parse_and());
        }
        return lhs;
    }

    formula parse_and() {
        formula lhs = parse_unary();
        while (peek().kind == tok::amp) {
            advance();
            lhs = make_and(std::move(lhs), parse_unary());
        }
        return lhs;
    }

    formula parse_unary() {
        switch (peek().kind) {
            case tok::tilde: advance(); return make_not(parse_unary());
            case tok::kw_forall:
            case tok::kw_exists: return parse_quantified();
            default: return parse_primary();
        }
    }

    formula parse_quantified() {
        quantifier q = advance().kind == tok::kw_forall ? quantifier::forall : quantifier::exists;
        const token& var = expect(tok::ident, "a variable name after quantifier");
        if (decls_.has_constant(var.text))
            fail("quantified variable '" + var.text + "' clashes with a declared constant", var.pos);
        expect(tok::lparen, "'(' to open the quantifier body");
        bound_.push_back(var.text);
        quantified_names_.insert(var.text);
        formula body = parse_iff();
        bound_.pop_back();
        expect(tok::rparen, "')' to close the quantifier body");
        return make_quantified(q, var.text, std::move(body));
    }

    formula parse_primary() {
        if (peek().kind == tok::lparen) {
            advance();
            formula inner = parse_iff();
            expect(tok::rparen, "')'");
            return inner;
        }
        const token& name = expect(tok::ident, "a predicate, '~', quantifier or '('");
        std::vector<term> args;
        if (peek().kind == tok::lparen) {
            advance();
            args.push_back(resolve(expect(tok::ident, "an argument")));
            while (peek().kind == tok::comma) {
                advance();
                args.push_back(resolve(expect(tok::ident, "an argument")));
            }
            expect(tok::rparen, "')' to close the argument list");
        }
        auto arity = decls_.arity_of(name.text);
        if (!arity)
            throw parse_error(parse_error_kind::undeclared_symbol, "predicate '" + name.text + "' is not declared",
                              name.pos, name.text);
        if (*arity != static_cast<int>(args.size()))
            throw parse_error(parse_error_kind::arity_mismatch,
                              "predicate '" + name.text + "' declared with arity " + std::to_string(*arity) +
                                  " but applied to " + std::to_string(args.size()) + " argument(s)",
                              name.pos, name.text);
        return make_atom(name.text, std::move(args));
    }

    term resolve(const token& t) {
        for (auto it = bound_.rbegin(); it != bound_.rend(); ++it)
            if (*it == t.text) return variable(t.text);
        if (decls_.has_constant(t.text)) return constant(t.text);
        if (!unresolved_) unresolved_.emplace(t.text, t.pos);
        return variable(t.text);
    }

    std::vector<token> tokens_;
    std::size_t index_ = 0;
    const declarations& decls_;
    std::vector<std::string> bound_;
    std::set<std::string> quantified_names_;
    std::optional<std::pair<std::string, std::size_t>> unresolved_;
};

inline int precedence(const formula& f) {
    if (const auto* b = std::get_if<binary>(&f.get().value)) {
        switch (b->op) {
            case connective::iff: return 1;
            case connective::implies: return 2;
            case connective::disj: return 3;
            case connective::conj: return 4;
        }
    }
    return 5;
}

inline const char* symbol(connective op) {
    switch (op) {
        case connective::conj: return " & ";
        case connective::disj: return " | ";
        case connective::implies: return " -> ";
        case connective::iff: return " <-> ";
    }
    return "?";
}

inline void print(std::ostream& os, const formula& f, int required) {
    bool parens = precedence(f) < required;
    if (parens) os << '(';
    std::visit(overloaded{
                   [&](const atom& a) {
                       os << a.predicate;
                       if (!a.args.empty()) {
                           os << '(';
                           for (std::size_t i = 0; i < a.args.size(); ++i) os << (i ? ", " : "") << a.args[i].name;
                           os << ')';
                       }
                   },
                   [&](const negation& n) {
                       os << '~';
                       print(os, n.operand, 5);
                   },
                   [&](const binary& b) {
                       int p = precedence(f);
                       bool right_assoc = b.op == connective::implies;
                       print(os, b.lhs, right_assoc ? p + 1 : p);
                       os << symbol(b.op);
                       print(os, b.rhs, right_assoc ? p : p + 1);
                   },
                   [&](const quantified& q) {
                       os << (q.q == quantifier::forall ? "forall " : "exists ") << q.variable << " (";
                       print(os, q.body, 0);
                       os << ')';
                   },
               },
               f.get().value);
    if (parens) os << ')';
}

}  // namespace detail

inline formula parse_formula(std::string_view text, const declarations& decls) {
    return detail::parser(text, decls).parse();
}

inline std::string format_formula(const formula& f) {
    std::ostringstream os;
    detail::print(os, f, 0);
    return os.str();
}

inline std::ostream& operator<<(std::ostream& os, const formula& f) {
    detail::print(os, f, 0);
    return os;
}

inline void collect_free_variables(const formula& f, std::vector<std::string>& bound, std::set<std::string>& out) {
    std::visit(overloaded{
                   [&](const atom& a) {
                       for (const auto& t : a.args) {
                           if (t.kind != term_kind::variable) continue;
                           bool is_bound = false;
                           for (const auto& b : bound) is_bound = is_bound || b == t.name;
                           if (!is_bound) out.insert(t.name);
                       }
                   },
                   [&](const negation& n) { collect_free_variables(n.operand, bound, out); },
                   [&](const binary& b) {
                       collect_free_variables(b.lhs, bound, out);
                       collect_free_variables(b.rhs, bound, out);
                   },
                   [&](const quantified& q) {
                       bound.push_back(q.variable);
                       collect_free_variables(q.body, bound, out);
                       bound.pop_back();
                   },
               },
               f.get().value);
}

inline std::set<std::string> free_variables(const formula& f) {
    std::vector<std::string> bound;
    std::set<std::string> out;
    collect_free_variables(f, bound, out);
    return out;
}

inline bool has_quantifier(const formula& f) {
    return std::visit(overloaded{
                          [](const atom&) { return false; },
                          [](const negation& n) { return has_quantifier(n.operand); },
                          [](const binary& b) { return has_quantifier(b.lhs) || has_quantifier(b.rhs); },
                          [](const quantified&) { return true; },
                      },
                      f.get().value);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split_list(std::string_view body) {
    body = trim(body);
    if (!body.empty() && body.back() == ';') body.remove_suffix(1);
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= body.size()) {
        std::size_t comma = body.find(',', start);
        if (comma == std::string_view::npos) comma = body.size();
        auto item = trim(body.substr(start, comma - start));
        if (!item.empty()) out.emplace_back(item);
        start = comma + 1;
    }
    return out;
}

inline bool is_identifier(std::string_view s) {
    if (s.empty() || !ident_start(s.front())) return false;
    for (char c : s)
        if (!ident_char(c)) return false;
    return s != "forall" && s != "exists";
}

}  // namespace detail

// Reads the theory file format:
//   consts: a, b;
//   preds: P/1, Q/1, T/0;
//   premise: <formula>        (repeatable; may continue on following lines)
//   conclusion: <formula>
// '#' starts a comment that runs to end of line.
inline theory parse_theory(std::string_view text) {
    struct section {
        std::string keyword;
        std::string body;
        std::size_t line;
    };
    std::vector<section> sections;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        auto trimmed = detail::trim(line);
        if (trimmed.empty()) continue;
        bool opened = false;
        for (const char* kw : {"consts", "preds", "premise", "conclusion"}) {
            std::string_view k(kw);
            if (trimmed.substr(0, k.size()) == k) {
                auto rest = detail::trim(trimmed.substr(k.size()));
                if (!rest.empty() && rest.front() == ':') {
                    sections.push_back({std::string(k), std::string(rest.substr(1)), line_no});
                    opened = true;
                    break;
                }
            }
        }
        if (opened) continue;
        if (sections.empty())
            throw parse_error(parse_error_kind::syntax, "expected a 'consts:', 'preds:', 'premise:' or 'conclusion:' line",
                              0, {}, line_no);
        sections.back().body += ' ';
        sections.back().body += trimmed;
    }

    theory th;
    bool saw_preds = false;
    bool saw_conclusion = false;
    std::set<std::string> seen;
    for (const auto& s : sections) {
        if (s.keyword == "consts") {
            for (auto& c : detail::split_list(s.body)) {
                if (!detail::is_identifier(c))
                    throw parse_error(parse_error_kind::syntax, "invalid constant name '" + c + "'", 0, c, s.line);
                if (!seen.insert(c).second)
                    throw parse_error(parse_error_kind::syntax, "symbol '" + c + "' declared twice", 0, c, s.line);
                th.decls.constants.push_back(std::move(c));
            }
        } else if (s.keyword == "preds") {
            saw_preds = true;
            for (const auto& item : detail::split_list(s.body)) {
                auto slash = item.find('/');
                std::string name = std::string(detail::trim(std::string_view(item).substr(0, slash)));
                if (slash == std::string::npos || !detail::is_identifier(name))
                    throw parse_error(parse_error_kind::syntax, "predicate declaration must look like Name/arity", 0,
                                      item, s.line);
                auto digits = detail::trim(std::string_view(item).substr(slash + 1));
                int arity = 0;
                if (digits.empty()) throw parse_error(parse_error_kind::syntax, "missing arity", 0, item, s.line);
                for (char c : digits) {
                    if (!std::isdigit(static_cast<unsigned char>(c)))
                        throw parse_error(parse_error_kind::syntax, "arity must be a nonnegative integer", 0, item,
                                          s.line);
                    arity = arity * 10 + (c - '0');
                    if (arity > 16) throw parse_error(parse_error_kind::syntax, "arity too large", 0, item, s.line);
                }
                if (!seen.insert(name).second)
                    throw parse_error(parse_error_kind::syntax, "symbol '" + name + "' declared twice", 0, name, s.line);
                th.decls.predicates.push_back({std::move(name), arity});
            }
        }
    }
    if (!saw_preds) throw parse_error(parse_error_kind::missing_section, "no 'preds:' declaration", 0, "preds");
    for (const auto& s : sections) {
        if (s.keyword != "premise" && s.keyword != "conclusion") continue;
        formula f;
        try {
            f = parse_formula(s.body, th.decls);
        } catch (const parse_error& e) {
            throw e.at_line(s.line);
        }
        if (s.keyword == "premise") {
            th.premises.push_back(std::move(f));
        } else {
            if (saw_conclusion)
                throw parse_error(parse_error_kind::syntax, "more than one conclusion", 0, {}, s.line);
            saw_conclusion = true;
            th.conclusion = std::move(f);
        }
    }
    if (!saw_conclusion)
        throw parse_error(parse_error_kind::missing_section, "no 'conclusion:' line", 0, "conclusion");
    return th;
}

inline std::string format_theory(const theory& th) {
    std::ostringstream os;
    os << "consts: ";
    for (std::size_t i = 0; i < th.decls.constants.size(); ++i) os << (i ? ", " : "") << th.decls.constants[i];
    os << ";\npreds: ";
    for (std::size_t i = 0; i < th.decls.predicates.size(); ++i)
        os << (i ? ", " : "") << th.decls.predicates[i].name << '/' << th.decls.predicates[i].arity;
    os << ";\n";
    for (const auto& p : th.premises) os << "premise: " << p << '\n';
    os << "conclusion: " << th.conclusion << '\n';
    return os.str();
}

}  // namespace mot::logic
