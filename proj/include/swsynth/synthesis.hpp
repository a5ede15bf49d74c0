#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "swsynth/abstraction.hpp"
#include "swsynth/ltlf.hpp"

namespace swsynth {

using StateIndex = std::uint32_t;

struct ProductEntry {
    StateIndex target;
    double lo;
    double hi;
};

/// Explicit successors sorted by target, plus every member of background
/// group `group` that is not listed, each with interval [0, background_hi].
struct ProductRow {
    std::vector<ProductEntry> entries;
    double background_hi = 0.0;
    std::uint32_t group = 0;
};

/// An interval MDP with a reachability target. build_product fills the
/// cell/automaton bookkeeping; hand-built models may leave it empty.
struct Pimdp {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<ProductRow> rows;  // state * num_actions + action, actions 0-based
    std::vector<std::vector<StateIndex>> groups;
    std::vector<std::uint8_t> accepting;
    /// Absorbing states keep their initial value: 1 if accepting, else 0.
    std::vector<std::uint8_t> absorbing;

    std::size_t num_cells = 0;
    std::size_t dfa_states = 0;
    std::vector<StateIndex> initial;  // per cell

    const ProductRow& row(StateIndex z, std::size_t a) const { return rows[z * num_actions + a]; }
    StateIndex index(CellIndex q, std::uint32_t s) const { return static_cast<StateIndex>(q * dfa_states + s); }
    /// Throws std::invalid_argument on broken structure or a row with
    /// sum lo > 1 or sum hi < 1 beyond 1e-9.
    void validate() const;
};

/// State (q, s) is q * |S| + s, the unsafe state included. Successor cell q'
/// moves the automaton by the label of q'; entering the unsafe state freezes
/// it. Throws ConfigError when the automaton reads a proposition the
/// partition does not define.
Pimdp build_product(const Imdp& imdp, const ltlf::Dfa& dfa);

/// Automaton symbol of a cell's labels.
ltlf::Symbol cell_symbol(const Partition& partition, CellIndex q, const ltlf::Dfa& dfa);

enum class Direction { minimize, maximize };

struct Successor {
    double lo;
    double hi;
    double value;
};

struct AdversaryResult {
    std::vector<double> distribution;
    double value = 0.0;
};

/// Vertex of the interval polytope that optimizes the expected value: every
/// successor starts at lo and the remaining mass goes to the best values
/// first, ties to the smaller position. Throws NumericError for infeasible
/// intervals.
AdversaryResult adversary_extreme(std::span<const Successor> successors, Direction direction);

enum class Objective { maximin, maximax, fixed_min, fixed_max };

struct IviOptions {
    double tol = 1e-6;
    std::size_t max_sweeps = 100'000;
    bool parallel = true;
};

struct IviResult {
    std::vector<double> values;
    std::vector<std::uint32_t> strategy;  // action per state, 0-based
    std::size_t sweeps = 0;
    double residual = 0.0;
    bool converged = false;
};

/// Value iteration from 1 on accepting states and 0 elsewhere, double
/// buffered. The fixed objectives need `strategy`; the optimizing ones
/// return the argmax, which only switches on strict improvement.
IviResult interval_value_iteration(const Pimdp& pimdp, Objective objective, const IviOptions& options = {},
                                   const std::vector<std::uint32_t>* strategy = nullptr);

/// Expected value of one row under the extreme adversary.
double row_value(const Pimdp& pimdp, const ProductRow& row, std::span<const double> values, Direction direction);

enum class CellClass { yes, no, maybe };
const char* to_string(CellClass c);

struct SynthesisResult {
    double threshold = 0.0;
    std::vector<double> p_lower;       // per product state
    std::vector<double> p_upper;       // under the synthesized strategy
    std::vector<double> p_upper_star;  // best case over strategies
    std::vector<std::uint32_t> strategy;
    std::vector<CellClass> classes;    // per cell
    std::vector<double> gap;           // per cell
    std::size_t sweeps = 0;
    double residual = 0.0;
    bool converged = false;

    double lower(const Pimdp& p, CellIndex q) const { return p_lower[p.initial[q]]; }
    double upper(const Pimdp& p, CellIndex q) const { return p_upper[p.initial[q]]; }
    double upper_star(const Pimdp& p, CellIndex q) const { return p_upper_star[p.initial[q]]; }
};

/// Maximin iteration for the strategy, then the pessimistic and optimistic
/// values of that strategy and the optimistic optimum, iterated in lockstep
/// so p_lower <= p_upper <= p_upper_star holds sweep by sweep. Throws
/// NumericError if the iteration does not converge.
SynthesisResult synthesize(const Pimdp& pimdp, double threshold, const IviOptions& options = {});

void write_result(std::ostream& out, const Pimdp& pimdp, const Partition& partition, const SynthesisResult& r);
/// One line per cell: center coordinates, values, gap and class.
void write_heatmap_csv(std::ostream& out, const Pimdp& pimdp, const Partition& partition,
                       const SynthesisResult& r);

struct StoredResult {
    double threshold = 0.0;
    std::size_t dfa_states = 0;
    std::vector<double> lower, upper, upper_star, gap;  // per cell
    std::vector<CellClass> classes;
    std::vector<int> modes;  // cell * dfa_states + s, 1-based, 0 where undefined
};
StoredResult read_result(std::istream& in);

}  // namespace swsynth
