#include "swsynth/runtime.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "swsynth/errors.hpp"

namespace swsynth {

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::satisfied: return "satisfied";
        case Verdict::violated: return "violated";
        case Verdict::truncated: return "truncated";
    }
    return "?";
}

Controller::Controller(Partition partition, ltlf::Dfa dfa, std::vector<int> modes)
    : partition_(std::move(partition)), dfa_(std::move(dfa)), modes_(std::move(modes)) {
    if (modes_.size() != partition_.num_cells() * dfa_.num_states) {
        throw ConfigError(fmt::format("strategy has {} entries, expected {} cells x {} automaton states", modes_.size(),
                                      partition_.num_cells(), dfa_.num_states));
    }
    symbols_.resize(partition_.num_cells());
    for (CellIndex q = 0; q < partition_.num_cells(); ++q) symbols_[q] = cell_symbol(partition_, q, dfa_);
}

Controller Controller::from_result(const Pimdp& pimdp, const SynthesisResult& result, const Partition& partition,
                                   const ltlf::Dfa& dfa) {
    std::vector<int> modes(pimdp.num_cells * pimdp.dfa_states, 0);
    for (CellIndex q = 0; q < pimdp.num_cells; ++q) {
        for (std::uint32_t s = 0; s < pimdp.dfa_states; ++s) {
            const StateIndex z = pimdp.index(q, s);
            if (!pimdp.accepting[z] && !pimdp.absorbing[z]) {
                modes[q * pimdp.dfa_states + s] = static_cast<int>(result.strategy[z]) + 1;
            }
        }
    }
    return Controller(partition, dfa, std::move(modes));
}

Status Controller::enter(std::span<const double> x, std::uint32_t from) {
    const CellIndex q = partition_.locate(x);
    if (partition_.is_unsafe(q)) return status_ = Status::violated;
    cell_ = q;
    symbol_ = symbols_[q];
    dfa_state_ = dfa_.next(from, symbol_);
    if (dfa_.accepting[dfa_state_]) return status_ = Status::satisfied;
    if (dfa_.is_dead(dfa_state_)) return status_ = Status::violated;
    if (modes_[q * dfa_.num_states + dfa_state_] == 0) {
        throw std::logic_error(fmt::format("no action stored for cell {} and automaton state {}", q, dfa_state_));
    }
    return status_ = Status::running;
}

Status Controller::reset(std::span<const double> x0) { return enter(x0, dfa_.initial); }

Status Controller::observe(std::span<const double> x) {
    if (status_ != Status::running) throw std::logic_error("controller already stopped");
    return enter(x, dfa_state_);
}

int Controller::action() const {
    if (status_ != Status::running) throw std::logic_error("controller is not running");
    return modes_[cell_ * dfa_.num_states + dfa_state_];
}

SimulationTrace simulate(const Truth& truth, Controller controller, std::span<const double> x0, std::size_t max_steps,
                         std::uint64_t seed, std::uint64_t stream) {
    Rng rng = make_rng(seed, stream);
    SimulationTrace t;
    Vector x(x0.begin(), x0.end());
    auto record = [&](Status s) {
        t.states.push_back(x);
        if (s != Status::violated || !controller.partition().is_unsafe(controller.partition().locate(x))) {
            t.labels.push_back(controller.symbol());
            t.dfa_states.push_back(controller.dfa_state());
        }
    };
    Status s = controller.reset(x);
    record(s);
    while (s == Status::running && t.steps < max_steps) {
        const int u = controller.action();
        t.actions.push_back(u);
        x = truth.step(x, u, rng);
        ++t.steps;
        s = controller.observe(x);
        record(s);
    }
    t.verdict = s == Status::satisfied ? Verdict::satisfied : s == Status::violated ? Verdict::violated
                                                                                    : Verdict::truncated;
    return t;
}

void write_trace_csv(std::ostream& out, const SimulationTrace& trace) {
    const std::size_t n = trace.states.empty() ? 0 : trace.states[0].size();
    out << "step";
    for (std::size_t d = 0; d < n; ++d) out << ",x" << d + 1;
    out << ",action,dfa_state\n";
    for (std::size_t k = 0; k < trace.states.size(); ++k) {
        out << k;
        for (double v : trace.states[k]) out << fmt::format(",{:.17g}", v);
        out << ',' << (k < trace.actions.size() ? trace.actions[k] : 0) << ',';
        if (k < trace.dfa_states.size()) out << trace.dfa_states[k];
        out << '\n';
    }
}

Wilson wilson(std::size_t successes, std::size_t trials, double z) {
    if (trials == 0) throw std::invalid_argument("wilson: no trials");
    const double n = static_cast<double>(trials), p = static_cast<double>(successes) / n;
    const double den = 1 + z * z / n;
    return {(p + z * z / (2 * n)) / den, z / den * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n))};
}

bool MonteCarlo::inconsistent_with(double lower, double upper, double pad) const {
    return interval.hi() < lower - pad || interval.lo() > upper + pad;
}

MonteCarlo monte_carlo(const Truth& truth, const Controller& controller, std::span<const double> x0,
                       std::size_t trials, std::size_t max_steps, std::uint64_t seed) {
    if (trials == 0) throw ConfigError("monte carlo needs at least one trial");
    std::vector<Verdict> verdicts(trials);
    const auto count = static_cast<long long>(trials);
#pragma omp parallel for schedule(dynamic, 16)
    for (long long i = 0; i < count; ++i) {
        verdicts[static_cast<std::size_t>(i)] =
            simulate(truth, controller, x0, max_steps, seed, static_cast<std::uint64_t>(i)).verdict;
    }
    MonteCarlo mc;
    mc.trials = trials;
    for (Verdict v : verdicts) {
        mc.satisfied += v == Verdict::satisfied;
        mc.violated += v == Verdict::violated;
        mc.truncated += v == Verdict::truncated;
    }
    mc.rate = static_cast<double>(mc.satisfied) / static_cast<double>(trials);
    mc.interval = wilson(mc.satisfied, trials);
    return mc;
}

}  // namespace swsynth
