#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace swsynth::ltlf {

enum class Op { t, f, atom, neg, conj, disj, next, until, eventually, globally };

struct Node;
using Formula = std::shared_ptr<const Node>;

struct Node {
    Op op;
    std::string atom;           // Op::atom only
    std::vector<Formula> args;  // conj/disj are n-ary
};

Formula make_true();
Formula make_false();
Formula make_atom(std::string name);
Formula make_not(Formula a);
Formula make_and(std::vector<Formula> args);
Formula make_or(std::vector<Formula> args);
Formula make_next(Formula a);
Formula make_until(Formula a, Formula b);
Formula make_eventually(Formula a);
Formula make_globally(Formula a);

/// Grammar: atoms are identifiers, `true`, `false`, operators `! X F G U & |`
/// and parentheses. Precedence ! = X = F = G > U (right-assoc) > & > |.
/// With a non-empty `ap`, atoms outside it are rejected. Errors are
/// ConfigError carrying the column.
Formula parse(std::string_view text, const std::vector<std::string>& ap = {});

std::string to_string(const Formula& f);
bool equal(const Formula& a, const Formula& b);
std::vector<std::string> atoms(const Formula& f);

/// A symbol is a bitmask over `ap`.
using Symbol = std::uint32_t;
using Trace = std::vector<Symbol>;

/// rho, i |= f for 0 <= i <= |rho|. Position |rho| is the empty suffix: no
/// atom holds there, X/U/F are false and G is true.
bool evaluate(const Formula& f, const Trace& rho, std::size_t i, const std::vector<std::string>& ap);

/// Flattened, sorted, deduplicated Boolean structure with constants folded,
/// complements detected and negations pushed through & and |.
Formula normalize(const Formula& f);

struct Dfa {
    std::vector<std::string> ap;
    std::size_t num_states = 0;
    std::vector<std::uint32_t> delta;  // state * num_symbols() + symbol
    std::uint32_t initial = 0;
    std::vector<bool> accepting;

    std::size_t num_symbols() const { return std::size_t{1} << ap.size(); }
    std::uint32_t next(std::uint32_t s, Symbol a) const;
    bool accepts(const Trace& rho) const;
    /// Non-accepting state that no symbol leaves.
    bool is_dead(std::uint32_t s) const;
    /// Accepting state that no symbol leaves.
    bool is_accepting_sink(std::uint32_t s) const;
};

/// Progression construction, Hopcroft minimization and BFS renumbering
/// (symbols in increasing order), so equal languages give equal tables.
/// Throws ConfigError past `state_budget` progressed formulas.
Dfa to_dfa(const Formula& f, const std::vector<std::string>& ap, std::size_t state_budget = 1'000'000);

/// Minimal DFA of any complete automaton, renumbered canonically.
Dfa minimize(const Dfa& dfa);

void write_dfa(std::ostream& out, const Dfa& dfa);

}  // namespace swsynth::ltlf
