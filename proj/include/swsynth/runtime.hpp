#pragma once

#include <iosfwd>
#include <vector>

#include "swsynth/ltlf.hpp"
#include "swsynth/synthesis.hpp"
#include "swsynth/truth.hpp"

namespace swsynth {

enum class Status { running, satisfied, violated };
enum class Verdict { satisfied, violated, truncated };
const char* to_string(Verdict v);

/// Switching controller: the product strategy read through the cell of the
/// current state and the automaton state tracked along the run.
class Controller {
public:
    /// `modes[q * |S| + s]` is the 1-based mode, 0 where none is needed.
    Controller(Partition partition, ltlf::Dfa dfa, std::vector<int> modes);
    static Controller from_result(const Pimdp& pimdp, const SynthesisResult& result, const Partition& partition,
                                  const ltlf::Dfa& dfa);

    /// Reads the label of the starting cell. Leaving the domain is a violation.
    Status reset(std::span<const double> x0);
    /// Reads the label of the next observed state.
    Status observe(std::span<const double> x);
    /// Mode for the current (cell, automaton state). Throws std::logic_error
    /// unless the status is running.
    int action() const;

    Status status() const { return status_; }
    CellIndex cell() const { return cell_; }
    std::uint32_t dfa_state() const { return dfa_state_; }
    ltlf::Symbol symbol() const { return symbol_; }
    const Partition& partition() const { return partition_; }
    const ltlf::Dfa& dfa() const { return dfa_; }

private:
    Status enter(std::span<const double> x, std::uint32_t from);

    Partition partition_;
    ltlf::Dfa dfa_;
    std::vector<int> modes_;
    std::vector<ltlf::Symbol> symbols_;
    CellIndex cell_ = 0;
    std::uint32_t dfa_state_ = 0;
    ltlf::Symbol symbol_ = 0;
    Status status_ = Status::violated;
};

struct SimulationTrace {
    std::vector<Vector> states;
    std::vector<int> actions;             // one fewer than states
    std::vector<std::uint32_t> dfa_states;
    ltlf::Trace labels;                   // symbols of the states inside the domain
    Verdict verdict = Verdict::truncated;
    std::size_t steps = 0;
};

/// Closed loop x+ = drift(x, u) + v from x0 until acceptance, violation or
/// `max_steps`. The noise stream is make_rng(seed, stream).
SimulationTrace simulate(const Truth& truth, Controller controller, std::span<const double> x0, std::size_t max_steps,
                         std::uint64_t seed, std::uint64_t stream = 0);

/// CSV: step, x1..xn, action, dfa_state. The last row has action 0.
void write_trace_csv(std::ostream& out, const SimulationTrace& trace);

struct Wilson {
    double center = 0.0;
    double half_width = 0.0;
    double lo() const { return center - half_width; }
    double hi() const { return center + half_width; }
};
/// Wilson score interval; the default z gives 99%.
Wilson wilson(std::size_t successes, std::size_t trials, double z = 2.5758293035489);

struct MonteCarlo {
    std::size_t trials = 0;
    std::size_t satisfied = 0;
    std::size_t violated = 0;
    std::size_t truncated = 0;
    double rate = 0.0;
    Wilson interval;
    /// The Wilson interval misses [lower - pad, upper + pad].
    bool inconsistent_with(double lower, double upper, double pad = 0.0) const;
};

/// Trial i uses stream i, so the outcome does not depend on thread count.
MonteCarlo monte_carlo(const Truth& truth, const Controller& controller, std::span<const double> x0,
                       std::size_t trials, std::size_t max_steps, std::uint64_t seed);

}  // namespace swsynth
