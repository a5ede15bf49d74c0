#include "swsynth/ltlf.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <map>
#include <ostream>
#include <unordered_map>

#include <fmt/format.h>

#include "swsynth/errors.hpp"

namespace swsynth::ltlf {

// ---------------------------------------------------------------------------
// Constructors

namespace {
Formula node(Op op, std::vector<Formula> args = {}, std::string atom = {}) {
    for (const auto& a : args) {
        if (!a) throw std::invalid_argument("null formula argument");
    }
    return std::make_shared<const Node>(Node{op, std::move(atom), std::move(args)});
}
}  // namespace

Formula make_true() { return node(Op::t); }
Formula make_false() { return node(Op::f); }
Formula make_atom(std::string name) { return node(Op::atom, {}, std::move(name)); }
Formula make_not(Formula a) { return node(Op::neg, {std::move(a)}); }
Formula make_and(std::vector<Formula> args) {
    if (args.empty()) return make_true();
    if (args.size() == 1) return args[0];
    return node(Op::conj, std::move(args));
}
Formula make_or(std::vector<Formula> args) {
    if (args.empty()) return make_false();
    if (args.size() == 1) return args[0];
    return node(Op::disj, std::move(args));
}
Formula make_next(Formula a) { return node(Op::next, {std::move(a)}); }
Formula make_until(Formula a, Formula b) { return node(Op::until, {std::move(a), std::move(b)}); }
Formula make_eventually(Formula a) { return node(Op::eventually, {std::move(a)}); }
Formula make_globally(Formula a) { return node(Op::globally, {std::move(a)}); }

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
public:
    Parser(std::string_view text, const std::vector<std::string>& ap) : text_(text), ap_(ap) { advance(); }

    Formula parse_all() {
        Formula f = parse_or();
        if (kind_ != Tok::end) fail(fmt::format("unexpected '{}'", tok_));
        return f;
    }

private:
    enum class Tok { end, ident, bang, amp, bar, lparen, rparen };

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError(fmt::format("formula parse error at column {}: {}", start_ + 1, what));
    }

    void advance() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        start_ = pos_;
        if (pos_ == text_.size()) {
            kind_ = Tok::end;
            tok_ = "end of input";
            return;
        }
        const char c = text_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t e = pos_ + 1;
            while (e < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[e])) || text_[e] == '_')) ++e;
            tok_ = std::string(text_.substr(pos_, e - pos_));
            kind_ = Tok::ident;
            pos_ = e;
            return;
        }
        ++pos_;
        tok_ = std::string(1, c);
        switch (c) {
            case '!': kind_ = Tok::bang; return;
            case '&': kind_ = Tok::amp; return;
            case '|': kind_ = Tok::bar; return;
            case '(': kind_ = Tok::lparen; return;
            case ')': kind_ = Tok::rparen; return;
            default: fail(fmt::format("unknown token '{}'", c));
        }
    }

    bool is_keyword(const char* k) const { return kind_ == Tok::ident && tok_ == k; }

    Formula parse_or() {
        std::vector<Formula> args{parse_and()};
        while (kind_ == Tok::bar) {
            advance();
            args.push_back(parse_and());
        }
        return make_or(std::move(args));
    }

    Formula parse_and() {
        std::vector<Formula> args{parse_until()};
        while (kind_ == Tok::amp) {
            advance();
            args.push_back(parse_until());
        }
        return make_and(std::move(args));
    }

    Formula parse_until() {
        Formula lhs = parse_unary();
        if (is_keyword("U")) {
            advance();
            return make_until(std::move(lhs), parse_until());
        }
        return lhs;
    }

    Formula parse_unary() {
        if (kind_ == Tok::bang) {
            advance();
            return make_not(parse_unary());
        }
        if (is_keyword("X")) {
            advance();
            return make_next(parse_unary());
        }
        if (is_keyword("F")) {
            advance();
            return make_eventually(parse_unary());
        }
        if (is_keyword("G")) {
            advance();
            return make_globally(parse_unary());
        }
        return parse_primary();
    }

    Formula parse_primary() {
        if (kind_ == Tok::lparen) {
            const std::size_t open = start_;
            advance();
            Formula f = parse_or();
            if (kind_ != Tok::rparen) {
                throw ConfigError(fmt::format("formula parse error at column {}: unbalanced '(' opened at column {}",
                                              start_ + 1, open + 1));
            }
            advance();
            return f;
        }
        if (kind_ == Tok::ident) {
            if (tok_ == "U") fail("'U' needs a left operand");
            if (tok_ == "true") {
                advance();
                return make_true();
            }
            if (tok_ == "false") {
                advance();
                return make_false();
            }
            if (!ap_.empty() && std::find(ap_.begin(), ap_.end(), tok_) == ap_.end()) {
                fail(fmt::format("undeclared atom '{}'", tok_));
            }
            Formula a = make_atom(tok_);
            advance();
            return a;
        }
        if (kind_ == Tok::end) fail("unexpected end of input");
        fail(fmt::format("unexpected '{}'", tok_));
    }

    std::string_view text_;
    const std::vector<std::string>& ap_;
    std::size_t pos_ = 0;
    std::size_t start_ = 0;
    Tok kind_ = Tok::end;
    std::string tok_;
};

}  // namespace

Formula parse(std::string_view text, const std::vector<std::string>& ap) { return Parser(text, ap).parse_all(); }

std::string to_string(const Formula& f) {
    switch (f->op) {
        case Op::t: return "true";
        case Op::f: return "false";
        case Op::atom: return f->atom;
        case Op::neg: return "!" + to_string(f->args[0]);
        case Op::next: return "X " + to_string(f->args[0]);
        case Op::eventually: return "F " + to_string(f->args[0]);
        case Op::globally: return "G " + to_string(f->args[0]);
        case Op::until: return "(" + to_string(f->args[0]) + " U " + to_string(f->args[1]) + ")";
        case Op::conj:
        case Op::disj: {
            std::string s = "(";
            for (std::size_t i = 0; i < f->args.size(); ++i) {
                if (i) s += f->op == Op::conj ? " & " : " | ";
                s += to_string(f->args[i]);
            }
            return s + ")";
        }
    }
    return {};
}

bool equal(const Formula& a, const Formula& b) {
    if (a->op != b->op || a->atom != b->atom || a->args.size() != b->args.size()) return false;
    for (std::size_t i = 0; i < a->args.size(); ++i) {
        if (!equal(a->args[i], b->args[i])) return false;
    }
    return true;
}

std::vector<std::string> atoms(const Formula& f) {
    std::vector<std::string> out;
    auto walk = [&](auto&& self, const Formula& g) -> void {
        if (g->op == Op::atom && std::find(out.begin(), out.end(), g->atom) == out.end()) out.push_back(g->atom);
        for (const auto& a : g->args) self(self, a);
    };
    walk(walk, f);
    return out;
}

// ---------------------------------------------------------------------------
// Semantics

bool evaluate(const Formula& f, const Trace& rho, std::size_t i, const std::vector<std::string>& ap) {
    const std::size_t n = rho.size();
    if (i > n) throw std::invalid_argument("evaluate: position past the end of the trace");
    switch (f->op) {
        case Op::t: return true;
        case Op::f: return false;
        case Op::atom: {
            if (i == n) return false;
            const auto it = std::find(ap.begin(), ap.end(), f->atom);
            if (it == ap.end()) throw ConfigError(fmt::format("atom '{}' is not in the alphabet", f->atom));
            return (rho[i] >> (it - ap.begin())) & 1u;
        }
        case Op::neg: return !evaluate(f->args[0], rho, i, ap);
        case Op::conj:
            return std::all_of(f->args.begin(), f->args.end(), [&](const Formula& g) { return evaluate(g, rho, i, ap); });
        case Op::disj:
            return std::any_of(f->args.begin(), f->args.end(), [&](const Formula& g) { return evaluate(g, rho, i, ap); });
        case Op::next: return n > i + 1 && evaluate(f->args[0], rho, i + 1, ap);
        case Op::until:
            for (std::size_t j = i; j < n; ++j) {
                if (evaluate(f->args[1], rho, j, ap)) return true;
                if (!evaluate(f->args[0], rho, j, ap)) return false;
            }
            return false;
        case Op::eventually:
            for (std::size_t j = i; j < n; ++j) {
                if (evaluate(f->args[0], rho, j, ap)) return true;
            }
            return false;
        case Op::globally:
            for (std::size_t j = i; j < n; ++j) {
                if (!evaluate(f->args[0], rho, j, ap)) return false;
            }
            return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Hash-consed terms used for normalization and progression

namespace {

enum class K : std::uint8_t { t, f, atom, nonempty, neg, conj, disj, next, until, eventually, globally };

using Id = std::uint32_t;

struct Term {
    K k;
    int atom;
    std::vector<Id> ch;
    bool operator==(const Term&) const = default;
};

struct TermHash {
    std::size_t operator()(const Term& t) const {
        std::size_t h = static_cast<std::size_t>(t.k) * 0x9e3779b97f4a7c15ULL + static_cast<std::size_t>(t.atom + 1);
        for (Id c : t.ch) h = (h ^ c) * 0x100000001b3ULL + (h >> 29);
        return h;
    }
};

class Terms {
public:
    Terms() {
        true_ = intern({K::t, -1, {}});
        false_ = intern({K::f, -1, {}});
        nonempty_ = intern({K::nonempty, -1, {}});
    }

    const Term& operator[](Id i) const { return terms_[i]; }
    std::size_t size() const { return terms_.size(); }
    Id t() const { return true_; }
    Id f() const { return false_; }
    Id nonempty() const { return nonempty_; }

    Id atom(int a) { return intern({K::atom, a, {}}); }

    Id neg(Id x) {
        const Term& tx = terms_[x];
        switch (tx.k) {
            case K::t: return false_;
            case K::f: return true_;
            case K::neg: return tx.ch[0];
            case K::conj:
            case K::disj: {
                std::vector<Id> parts;
                for (Id c : std::vector<Id>(tx.ch)) parts.push_back(neg(c));
                return tx.k == K::conj ? disj(std::move(parts)) : conj(std::move(parts));
            }
            default: return intern({K::neg, -1, {x}});
        }
    }

    Id conj(std::vector<Id> xs) { return junction(K::conj, std::move(xs)); }
    Id disj(std::vector<Id> xs) { return junction(K::disj, std::move(xs)); }

    Id next(Id a) { return a == false_ ? false_ : intern({K::next, -1, {a}}); }
    Id until(Id a, Id b) { return b == false_ ? false_ : intern({K::until, -1, {a, b}}); }
    Id eventually(Id a) { return a == false_ ? false_ : intern({K::eventually, -1, {a}}); }
    Id globally(Id a) { return a == true_ ? true_ : intern({K::globally, -1, {a}}); }

private:
    Id intern(Term t) {
        auto it = index_.find(t);
        if (it != index_.end()) return it->second;
        const auto id = static_cast<Id>(terms_.size());
        terms_.push_back(t);
        index_.emplace(std::move(t), id);
        return id;
    }

    Id junction(K k, std::vector<Id> xs) {
        const Id unit = k == K::conj ? true_ : false_;
        const Id zero = k == K::conj ? false_ : true_;
        std::vector<Id> flat;
        for (Id x : xs) {
            if (terms_[x].k == k) {
                flat.insert(flat.end(), terms_[x].ch.begin(), terms_[x].ch.end());
            } else if (x == zero) {
                return zero;
            } else if (x != unit) {
                flat.push_back(x);
            }
        }
        std::sort(flat.begin(), flat.end());
        flat.erase(std::unique(flat.begin(), flat.end()), flat.end());
        for (Id x : flat) {
            if (terms_[x].k == K::neg && std::binary_search(flat.begin(), flat.end(), terms_[x].ch[0])) return zero;
        }
        if (flat.empty()) return unit;
        if (flat.size() == 1) return flat[0];
        return intern({k, -1, std::move(flat)});
    }

    std::vector<Term> terms_;
    std::unordered_map<Term, Id, TermHash> index_;
    Id true_, false_, nonempty_;
};

Id lower(Terms& terms, const Formula& f, const std::vector<std::string>& ap) {
    auto sub = [&](std::size_t i) { return lower(terms, f->args[i], ap); };
    switch (f->op) {
        case Op::t: return terms.t();
        case Op::f: return terms.f();
        case Op::atom: {
            const auto it = std::find(ap.begin(), ap.end(), f->atom);
            if (it == ap.end()) throw ConfigError(fmt::format("atom '{}' is not in the alphabet", f->atom));
            return terms.atom(static_cast<int>(it - ap.begin()));
        }
        case Op::neg: return terms.neg(sub(0));
        case Op::conj:
        case Op::disj: {
            std::vector<Id> xs;
            for (std::size_t i = 0; i < f->args.size(); ++i) xs.push_back(sub(i));
            return f->op == Op::conj ? terms.conj(std::move(xs)) : terms.disj(std::move(xs));
        }
        case Op::next: return terms.next(sub(0));
        case Op::until: {
            const Id a = sub(0);
            return terms.until(a, sub(1));
        }
        case Op::eventually: return terms.eventually(sub(0));
        case Op::globally: return terms.globally(sub(0));
    }
    return terms.f();
}

Formula raise(const Terms& terms, Id id, const std::vector<std::string>& ap) {
    const Term& t = terms[id];
    auto sub = [&](std::size_t i) { return raise(terms, t.ch[i], ap); };
    switch (t.k) {
        case K::t: return make_true();
        case K::f: return make_false();
        case K::atom: return make_atom(ap[static_cast<std::size_t>(t.atom)]);
        case K::nonempty: return make_eventually(make_true());
        case K::neg: return make_not(sub(0));
        case K::conj:
        case K::disj: {
            std::vector<Formula> xs;
            for (std::size_t i = 0; i < t.ch.size(); ++i) xs.push_back(sub(i));
            return t.k == K::conj ? make_and(std::move(xs)) : make_or(std::move(xs));
        }
        case K::next: return make_next(sub(0));
        case K::until: return make_until(sub(0), sub(1));
        case K::eventually: return make_eventually(sub(0));
        case K::globally: return make_globally(sub(0));
    }
    return make_false();
}

// A progressed obligation in disjunctive normal form over literals. A literal
// is 2 * id + negated, where id is an interned subformula read as "holds on
// the remaining suffix". Letters come from a finite set (the input's
// temporal subformulas, arguments of X, and Nonempty), so the set of
// reachable normal forms is finite.
using Cube = std::vector<std::uint32_t>;
using Dnf = std::vector<Cube>;

Dnf dnf_true() { return {Cube{}}; }

void simplify(Dnf& d) {
    std::sort(d.begin(), d.end(), [](const Cube& x, const Cube& y) {
        return x.size() != y.size() ? x.size() < y.size() : x < y;
    });
    d.erase(std::unique(d.begin(), d.end()), d.end());
    Dnf kept;
    for (auto& c : d) {
        const bool absorbed = std::any_of(kept.begin(), kept.end(), [&](const Cube& k) {
            return std::includes(c.begin(), c.end(), k.begin(), k.end());
        });
        if (!absorbed) kept.push_back(std::move(c));
    }
    std::sort(kept.begin(), kept.end());
    d = std::move(kept);
}

Dnf dnf_or(Dnf x, const Dnf& y) {
    x.insert(x.end(), y.begin(), y.end());
    simplify(x);
    return x;
}

Dnf dnf_and(const Dnf& x, const Dnf& y) {
    Dnf out;
    for (const auto& cx : x) {
        for (const auto& cy : y) {
            Cube c;
            std::set_union(cx.begin(), cx.end(), cy.begin(), cy.end(), std::back_inserter(c));
            bool contradictory = false;
            for (std::size_t i = 1; i < c.size() && !contradictory; ++i) contradictory = (c[i] ^ 1u) == c[i - 1];
            if (!contradictory) out.push_back(std::move(c));
        }
    }
    simplify(out);
    return out;
}

Dnf dnf_not(const Dnf& x) {
    Dnf out = dnf_true();
    for (const auto& c : x) {
        Dnf clause;
        for (auto lit : c) clause.push_back(Cube{lit ^ 1u});
        out = dnf_and(out, clause);
        if (out.empty()) break;
    }
    return out;
}

class Progressor {
public:
    explicit Progressor(Terms& terms) : terms_(terms) {}

    Dnf letter(Id id) {
        if (id == terms_.t()) return dnf_true();
        if (id == terms_.f()) return {};
        if (terms_[id].k == K::neg) return {Cube{2 * terms_[id].ch[0] + 1}};
        return {Cube{2 * id}};
    }

    Dnf progress(const Dnf& d, Symbol a) {
        Dnf out;
        for (const auto& c : d) {
            Dnf conj = dnf_true();
            for (auto lit : c) {
                conj = dnf_and(conj, progress_literal(lit, a));
                if (conj.empty()) break;
            }
            out.insert(out.end(), conj.begin(), conj.end());
        }
        simplify(out);
        return out;
    }

    bool accepts_empty(const Dnf& d) {
        return std::any_of(d.begin(), d.end(), [&](const Cube& c) {
            return std::all_of(c.begin(), c.end(), [&](std::uint32_t lit) { return empty_holds(lit >> 1) != (lit & 1u); });
        });
    }

private:
    const Dnf& progress_literal(std::uint32_t lit, Symbol a) {
        const std::uint64_t key = (std::uint64_t{lit} << 32) | a;
        if (auto it = literal_memo_.find(key); it != literal_memo_.end()) return it->second;
        Dnf d = progress_term(lit >> 1, a);
        if (lit & 1u) d = dnf_not(d);
        return literal_memo_.emplace(key, std::move(d)).first->second;
    }

    Dnf progress_term(Id id, Symbol a) {
        const Term t = terms_[id];
        switch (t.k) {
            case K::t:
            case K::nonempty: return dnf_true();
            case K::f: return {};
            case K::atom: return ((a >> t.atom) & 1u) ? dnf_true() : Dnf{};
            case K::neg: return dnf_not(progress_term(t.ch[0], a));
            case K::conj: {
                Dnf d = dnf_true();
                for (Id c : t.ch) d = dnf_and(d, progress_term(c, a));
                return d;
            }
            case K::disj: {
                Dnf d;
                for (Id c : t.ch) d = dnf_or(std::move(d), progress_term(c, a));
                return d;
            }
            // The argument must hold on a suffix that is itself nonempty.
            case K::next: return dnf_and(letter(t.ch[0]), letter(terms_.nonempty()));
            case K::until:
                return dnf_or(progress_term(t.ch[1], a), dnf_and(progress_term(t.ch[0], a), letter(id)));
            case K::eventually: return dnf_or(progress_term(t.ch[0], a), letter(id));
            case K::globally: return dnf_and(progress_term(t.ch[0], a), letter(id));
        }
        return {};
    }

    bool empty_holds(Id id) const {
        const Term& t = terms_[id];
        switch (t.k) {
            case K::t:
            case K::globally: return true;
            case K::neg: return !empty_holds(t.ch[0]);
            case K::conj: return std::all_of(t.ch.begin(), t.ch.end(), [&](Id c) { return empty_holds(c); });
            case K::disj: return std::any_of(t.ch.begin(), t.ch.end(), [&](Id c) { return empty_holds(c); });
            default: return false;
        }
    }

    Terms& terms_;
    std::unordered_map<std::uint64_t, Dnf> literal_memo_;
};

}  // namespace

Formula normalize(const Formula& f) {
    auto ap = atoms(f);
    std::sort(ap.begin(), ap.end());
    Terms terms;
    for (std::size_t i = 0; i < ap.size(); ++i) terms.atom(static_cast<int>(i));
    return raise(terms, lower(terms, f, ap), ap);
}

// ---------------------------------------------------------------------------
// DFA

std::uint32_t Dfa::next(std::uint32_t s, Symbol a) const {
    if (a >= num_symbols()) throw std::invalid_argument(fmt::format("symbol {} outside the alphabet", a));
    return delta[s * num_symbols() + a];
}

bool Dfa::accepts(const Trace& rho) const {
    std::uint32_t s = initial;
    for (Symbol a : rho) s = next(s, a);
    return accepting[s];
}

bool Dfa::is_dead(std::uint32_t s) const {
    if (accepting[s]) return false;
    for (Symbol a = 0; a < num_symbols(); ++a) {
        if (delta[s * num_symbols() + a] != s) return false;
    }
    return true;
}

bool Dfa::is_accepting_sink(std::uint32_t s) const {
    if (!accepting[s]) return false;
    for (Symbol a = 0; a < num_symbols(); ++a) {
        if (delta[s * num_symbols() + a] != s) return false;
    }
    return true;
}

Dfa minimize(const Dfa& dfa) {
    const std::size_t n = dfa.num_states, k = dfa.num_symbols();

    // Hopcroft partition refinement.
    std::vector<std::uint32_t> block(n);
    std::vector<std::vector<std::uint32_t>> blocks;
    {
        std::vector<std::uint32_t> acc, rej;
        for (std::uint32_t s = 0; s < n; ++s) (dfa.accepting[s] ? acc : rej).push_back(s);
        for (auto* b : {&acc, &rej}) {
            if (b->empty()) continue;
            for (auto s : *b) block[s] = static_cast<std::uint32_t>(blocks.size());
            blocks.push_back(std::move(*b));
        }
    }
    std::vector<std::vector<std::vector<std::uint32_t>>> pred(k, std::vector<std::vector<std::uint32_t>>(n));
    for (std::uint32_t s = 0; s < n; ++s) {
        for (std::uint32_t a = 0; a < k; ++a) pred[a][dfa.delta[s * k + a]].push_back(s);
    }

    std::deque<std::pair<std::uint32_t, std::uint32_t>> work;
    std::vector<std::vector<bool>> in_work;  // [block][symbol]
    auto push = [&](std::uint32_t b, std::uint32_t a) {
        if (in_work.size() <= b) in_work.resize(b + 1, std::vector<bool>(k, false));
        if (!in_work[b][a]) {
            in_work[b][a] = true;
            work.emplace_back(b, a);
        }
    };
    in_work.resize(blocks.size(), std::vector<bool>(k, false));
    if (blocks.size() == 2) {
        const std::uint32_t smaller = blocks[0].size() <= blocks[1].size() ? 0 : 1;
        for (std::uint32_t a = 0; a < k; ++a) push(smaller, a);
    }

    std::vector<std::uint32_t> marked_count;
    std::vector<bool> marked(n, false);
    while (!work.empty()) {
        const auto [splitter, a] = work.front();
        work.pop_front();
        in_work[splitter][a] = false;

        std::vector<std::uint32_t> x;
        for (auto s : blocks[splitter]) {
            for (auto p : pred[a][s]) {
                if (!marked[p]) {
                    marked[p] = true;
                    x.push_back(p);
                }
            }
        }
        marked_count.assign(blocks.size(), 0);
        std::vector<std::uint32_t> touched;
        for (auto p : x) {
            if (marked_count[block[p]]++ == 0) touched.push_back(block[p]);
        }
        std::sort(touched.begin(), touched.end());
        for (auto y : touched) {
            if (marked_count[y] == blocks[y].size()) continue;
            std::vector<std::uint32_t> in, out;
            for (auto s : blocks[y]) (marked[s] ? in : out).push_back(s);
            const auto fresh = static_cast<std::uint32_t>(blocks.size());
            blocks[y] = std::move(out);
            for (auto s : in) block[s] = fresh;
            blocks.push_back(std::move(in));
            in_work.resize(blocks.size(), std::vector<bool>(k, false));
            for (std::uint32_t c = 0; c < k; ++c) {
                if (in_work[y][c]) {
                    push(fresh, c);
                } else {
                    push(blocks[fresh].size() <= blocks[y].size() ? fresh : y, c);
                }
            }
        }
        for (auto p : x) marked[p] = false;
    }

    // Canonical numbering: breadth-first from the initial block, symbols ascending.
    std::vector<std::int64_t> number(blocks.size(), -1);
    std::vector<std::uint32_t> order;
    number[block[dfa.initial]] = 0;
    order.push_back(block[dfa.initial]);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto rep = blocks[order[i]].front();
        for (std::uint32_t a = 0; a < k; ++a) {
            const auto b = block[dfa.delta[rep * k + a]];
            if (number[b] < 0) {
                number[b] = static_cast<std::int64_t>(order.size());
                order.push_back(b);
            }
        }
    }

    Dfa out;
    out.ap = dfa.ap;
    out.num_states = order.size();
    out.initial = 0;
    out.delta.resize(out.num_states * k);
    out.accepting.resize(out.num_states);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto rep = blocks[order[i]].front();
        out.accepting[i] = dfa.accepting[rep];
        for (std::uint32_t a = 0; a < k; ++a) {
            out.delta[i * k + a] = static_cast<std::uint32_t>(number[block[dfa.delta[rep * k + a]]]);
        }
    }
    return out;
}

Dfa to_dfa(const Formula& f, const std::vector<std::string>& ap, std::size_t state_budget) {
    if (ap.size() > 16) throw ConfigError("at most 16 atomic propositions are supported");
    Terms terms;
    Progressor prog(terms);
    const std::size_t k = std::size_t{1} << ap.size();

    std::map<Dnf, std::uint32_t> state_of;
    std::vector<Dnf> states{prog.letter(lower(terms, f, ap))};
    state_of.emplace(states[0], 0);
    Dfa raw;
    raw.ap = ap;
    for (std::size_t i = 0; i < states.size(); ++i) {
        for (Symbol a = 0; a < k; ++a) {
            Dnf next = prog.progress(states[i], a);
            auto [it, fresh] = state_of.emplace(next, static_cast<std::uint32_t>(states.size()));
            if (fresh) {
                if (states.size() >= state_budget) {
                    throw ConfigError(fmt::format("DFA construction exceeded the state budget of {}", state_budget));
                }
                states.push_back(std::move(next));
            }
            raw.delta.push_back(it->second);
        }
    }
    raw.num_states = states.size();
    raw.initial = 0;
    for (const auto& s : states) raw.accepting.push_back(prog.accepts_empty(s));
    return minimize(raw);
}

void write_dfa(std::ostream& out, const Dfa& dfa) {
    out << "swsynth-dfa 1\n";
    out << "ap";
    for (const auto& p : dfa.ap) out << ' ' << p;
    out << "\nstates " << dfa.num_states << "\ninitial " << dfa.initial << '\n';
    out << "# state accepting | successor for each symbol bitmask 0.." << dfa.num_symbols() - 1 << '\n';
    for (std::uint32_t s = 0; s < dfa.num_states; ++s) {
        out << s << ' ' << (dfa.accepting[s] ? 1 : 0) << " |";
        for (Symbol a = 0; a < dfa.num_symbols(); ++a) out << ' ' << dfa.delta[s * dfa.num_symbols() + a];
        out << '\n';
    }
}

}  // namespace swsynth::ltlf
