#include "swsynth/pipeline.hpp"

#include <numeric>
#include <ostream>

#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <fmt/format.h>

#include "swsynth/errors.hpp"

namespace swsynth {

std::vector<LearnedMode> learn_modes(const RunConfig& c, const Dataset& data) {
    for (const auto& s : data) {
        if (s.x.size() != c.dim() || s.x_plus.size() != c.dim()) {
            throw ConfigError(fmt::format("dataset has dimension {}, config has {}", s.x.size(), c.dim()));
        }
        if (s.mode < 1 || static_cast<std::size_t>(s.mode) > c.num_modes()) {
            throw ConfigError(fmt::format("dataset mode {} outside 1..{}", s.mode, c.num_modes()));
        }
    }
    std::vector<LearnedMode> out;
    for (const auto& r : build_residuals(data, c.known)) {
        if (r.inputs.rows() == 0) throw ConfigError(fmt::format("mode {} has no samples", r.mode));
        const auto i = static_cast<std::size_t>(r.mode - 1);
        out.push_back(learn_mode(r, c.kernel(i), c.noise.theta, learn_options(c, i)));
    }
    return out;
}

void write_learned(std::ostream& out, const std::vector<LearnedMode>& learned) {
    nlohmann::json j;
    j["modes"] = nlohmann::json::array();
    for (const auto& m : learned) j["modes"].push_back(to_json(m));
    out << j.dump(1) << '\n';
}

std::vector<LearnedMode> read_learned(std::istream& in) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(fmt::format("learned model: {}", e.what()));
    }
    if (!j.is_object() || !j.contains("modes") || !j["modes"].is_array()) {
        throw ConfigError("learned model needs a 'modes' array");
    }
    std::vector<LearnedMode> out;
    for (const auto& m : j["modes"]) out.push_back(learned_mode_from_json(m));
    return out;
}

std::vector<Imdp> abstract_modes(const RunConfig& c, const std::vector<LearnedMode>& learned, bool parallel,
                                 std::vector<AbstractionReport>* reports) {
    if (learned.size() != c.num_modes()) {
        throw ConfigError(fmt::format("{} learned modes, config has {}", learned.size(), c.num_modes()));
    }
    const Partition partition = make_partition(c);
    const AbstractionOptions options = abstraction_options(c);
    std::vector<Imdp> out;
    for (const auto& eta : eta_choices(c)) {
        AbstractionReport report;
        out.push_back(parallel ? build_imdp(partition, c.known, learned, eta, options, &report)
                               : build_imdp_serial(partition, c.known, learned, eta, options, &report));
        if (reports) reports->push_back(report);
    }
    return out;
}

Synthesis synthesize_imdp(const RunConfig& c, const Imdp& imdp) {
    ltlf::Dfa dfa = make_dfa(c);
    Pimdp pimdp = build_product(imdp, dfa);
    SynthesisResult result = synthesize(pimdp, c.threshold, ivi_options(c));
    return {std::move(dfa), std::move(pimdp), std::move(result)};
}

ValidationReport validate_yes_cells(const RunConfig& c, const Truth& truth, const Partition& partition,
                                    const ltlf::Dfa& dfa, const StoredResult& result) {
    if (result.classes.size() != partition.num_cells()) {
        throw ConfigError(fmt::format("result has {} cells, partition has {}", result.classes.size(),
                                      partition.num_cells()));
    }
    std::vector<CellIndex> yes;
    for (CellIndex q = 0; q < partition.num_cells(); ++q) {
        if (result.classes[q] == CellClass::yes) yes.push_back(q);
    }
    const Controller controller(partition, dfa, result.modes);
    Rng rng = make_rng(c.validate_seed, 0);
    const std::size_t k = std::min(c.validate_cells, yes.size());
    ValidationReport report;
    for (std::size_t i = 0; i < k; ++i) {
        boost::random::uniform_int_distribution<std::size_t> pick(i, yes.size() - 1);
        std::swap(yes[i], yes[pick(rng)]);
        const CellIndex q = yes[i];
        const Box cell = partition.cell(q);
        CellValidation v;
        v.cell = q;
        for (std::size_t d = 0; d < cell.dim(); ++d) {
            boost::random::uniform_real_distribution<double> uni(cell.lower(d), cell.upper(d));
            v.x0.push_back(uni(rng));
        }
        v.p_lower = result.lower[q];
        v.p_upper = result.upper[q];
        v.mc = monte_carlo(truth, controller, v.x0, c.validate_trials, c.validate_max_steps, c.validate_seed + i + 1);
        if (!v.mc.inconsistent_with(v.p_lower, v.p_upper)) ++report.consistent;
        report.cells.push_back(std::move(v));
    }
    return report;
}

void write_validation(std::ostream& out, const ValidationReport& report) {
    out << "# cell p_lower p_upper trials satisfied violated truncated rate wilson_lo wilson_hi consistent x0...\n";
    for (const auto& v : report.cells) {
        out << fmt::format("{} {:.6f} {:.6f} {} {} {} {} {:.6f} {:.6f} {:.6f} {}", v.cell, v.p_lower, v.p_upper,
                           v.mc.trials, v.mc.satisfied, v.mc.violated, v.mc.truncated, v.mc.rate,
                           v.mc.interval.lo(), v.mc.interval.hi(),
                           v.mc.inconsistent_with(v.p_lower, v.p_upper) ? "no" : "yes");
        for (double x : v.x0) out << fmt::format(" {:.17g}", x);
        out << '\n';
    }
    out << fmt::format("consistent {} of {}\n", report.consistent, report.cells.size());
}

}  // namespace swsynth
