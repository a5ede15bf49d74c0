#pragma once

#include <iosfwd>
#include <vector>

#include "swsynth/config.hpp"
#include "swsynth/runtime.hpp"

namespace swsynth {

/// One fit per mode 1..num_modes. A mode without samples is a ConfigError.
std::vector<LearnedMode> learn_modes(const RunConfig& c, const Dataset& data);
void write_learned(std::ostream& out, const std::vector<LearnedMode>& learned);
std::vector<LearnedMode> read_learned(std::istream& in);

/// One abstraction per entry of eta_choices(c).
std::vector<Imdp> abstract_modes(const RunConfig& c, const std::vector<LearnedMode>& learned, bool parallel = true,
                                 std::vector<AbstractionReport>* reports = nullptr);

struct Synthesis {
    ltlf::Dfa dfa;
    Pimdp pimdp;
    SynthesisResult result;
};
Synthesis synthesize_imdp(const RunConfig& c, const Imdp& imdp);

struct CellValidation {
    CellIndex cell = 0;
    Vector x0;
    double p_lower = 0.0;
    double p_upper = 0.0;
    MonteCarlo mc;
};

struct ValidationReport {
    std::vector<CellValidation> cells;
    std::size_t consistent = 0;  // Wilson interval meets [p_lower, p_upper]
};

/// Monte Carlo on validate_cells yes cells drawn without replacement, each
/// from one uniform start in the cell. Cell k uses seed validate_seed + k + 1.
ValidationReport validate_yes_cells(const RunConfig& c, const Truth& truth, const Partition& partition,
                                    const ltlf::Dfa& dfa, const StoredResult& result);
void write_validation(std::ostream& out, const ValidationReport& report);

}  // namespace swsynth
