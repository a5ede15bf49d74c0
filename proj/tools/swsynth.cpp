#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <omp.h>

#include "swsynth/errors.hpp"
#include "swsynth/pipeline.hpp"
#include "swsynth/scenario.hpp"

using namespace swsynth;

namespace {

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open '{}'", path));
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError(fmt::format("cannot write '{}'", path));
    return out;
}

RunConfig config_at(const std::string& path) { return path.empty() ? RunConfig{} : load_config(path); }

std::string key_help() {
    std::string s = "Config keys (JSON object; unknown keys are errors):\n";
    for (const auto& k : config_reference()) {
        s += fmt::format("  {:<20} {}\n  {:<20} default: {}\n", k.key, k.meaning, "", k.default_value);
    }
    return s;
}

/// out.txt with index 1 and fraction 0.75 -> out.eta0.75.txt
std::string eta_path(const std::string& base, const RunConfig& c, std::size_t i) {
    if (c.eta_fractions.empty()) return base;
    const auto dot = base.find_last_of('.');
    const auto slash = base.find_last_of('/');
    const bool ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
    const std::string tag = fmt::format(".eta{:g}", c.eta_fractions[i]);
    return ext ? base.substr(0, dot) + tag + base.substr(dot) : base + tag;
}

void report_abstraction(const Imdp& imdp, const AbstractionReport& r) {
    fmt::print(stderr, "abstraction: {} states x {} modes, eta {:.6g}, {} explicit entries, {} containment pairs\n",
               imdp.num_states(), imdp.num_actions(), imdp.eta().eta[0], r.explicit_entries, r.containment_pairs);
    fmt::print(stderr, "  repairs: {} rows scaled, {} rows raised; mean width {:.6f}, max background {:.3g}\n",
               r.lo_scaled, r.hi_raised, r.mean_width, r.max_background);
}

struct Tally {
    std::size_t yes = 0, no = 0, maybe = 0;
    double mean_lower = 0.0;
};

Tally tally(const Synthesis& s) {
    Tally t;
    for (CellIndex q = 0; q < s.pimdp.num_cells; ++q) {
        const CellClass k = s.result.classes[q];
        (k == CellClass::yes ? t.yes : k == CellClass::no ? t.no : t.maybe) += 1;
        t.mean_lower += s.result.lower(s.pimdp, q);
    }
    t.mean_lower /= static_cast<double>(s.pimdp.num_cells);
    return t;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Controller synthesis for partially known switched stochastic systems"};
    app.require_subcommand(1);
    app.footer(key_help());
    int threads = 0;
    app.add_option("--threads", threads, "OpenMP threads for abstraction and value iteration (0: runtime default)")
        ->check(CLI::NonNegativeNumber);
    std::string config_path;

    auto* gen = app.add_subcommand("gen-data", "sample a dataset from the configured scenario");
    std::string data_out;
    gen->add_option("--config", config_path, "run configuration");
    gen->add_option("--out", data_out, "dataset CSV")->required();

    auto* learn = app.add_subcommand("learn", "fit one regression model per mode and output dimension");
    std::string data_in, learned_path;
    learn->add_option("--config", config_path, "run configuration");
    learn->add_option("--data", data_in, "dataset CSV")->required();
    learn->add_option("--out", learned_path, "learned models (JSON)")->required();

    auto* abstract = app.add_subcommand("abstract", "build the interval MDP abstraction");
    std::string learned_in, imdp_path;
    abstract->add_option("--config", config_path, "run configuration");
    abstract->add_option("--learned", learned_in, "learned models")->required();
    abstract->add_option("--out", imdp_path, "IMDP file; with eta_fractions one file per fraction")->required();

    auto* synth = app.add_subcommand("synthesize", "compute the switching strategy and its bounds");
    std::string imdp_in, result_path, heatmap_path, dfa_path;
    synth->add_option("--config", config_path, "run configuration");
    synth->add_option("--imdp", imdp_in, "IMDP file")->required();
    synth->add_option("--out", result_path, "result file")->required();
    synth->add_option("--heatmap", heatmap_path, "per-cell CSV of bounds, gap and class");
    synth->add_option("--dfa", dfa_path, "automaton export");

    auto* validate = app.add_subcommand("validate", "Monte Carlo check of yes cells against the ground truth");
    std::string result_in, report_path, trace_path;
    validate->add_option("--config", config_path, "run configuration");
    validate->add_option("--imdp", imdp_in, "IMDP file the result was computed on")->required();
    validate->add_option("--result", result_in, "result file")->required();
    validate->add_option("--out", report_path, "report file (default: stdout)");
    validate->add_option("--trace", trace_path, "CSV of one closed-loop run from the first validated cell");

    auto* sweep = app.add_subcommand("sweep-eta", "abstract and synthesize once per noise radius");
    std::string sweep_out;
    sweep->add_option("--config", config_path, "run configuration");
    sweep->add_option("--learned", learned_in, "learned models")->required();
    sweep->add_option("--out", sweep_out, "CSV: fraction, eta, class counts, mean lower bound")->required();

    for (auto* sub : app.get_subcommands([](CLI::App*) { return true; })) sub->footer(key_help());

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (threads > 0) omp_set_num_threads(threads);
        const RunConfig c = config_at(config_path);

        if (gen->parsed()) {
            const Scenario sc = make_scenario(c.scenario);
            if (sc.domain.dim() != c.dim()) throw ConfigError("scenario and config dimensions differ");
            const Dataset data = generate_dataset(sc, c.samples_per_mode, c.seed);
            auto out = open_out(data_out);
            write_dataset_csv(out, data, c.dim());
            fmt::print(stderr, "{} samples over {} modes\n", data.size(), sc.truth.modes);
        } else if (learn->parsed()) {
            auto in = open_in(data_in);
            const auto learned = learn_modes(c, read_dataset_csv(in));
            for (const auto& m : learned) {
                for (std::size_t i = 0; i < m.dim(); ++i) {
                    const auto& o = m.outputs[i];
                    fmt::print(stderr, "mode {} dim {}: {} points, gamma {:.4f}, B {:.4f}{}\n", m.mode, i + 1,
                               o.gp.size(), o.info_gain, o.rkhs_bound, o.rkhs_heuristic ? " (heuristic)" : "");
                }
            }
            auto out = open_out(learned_path);
            write_learned(out, learned);
        } else if (abstract->parsed()) {
            auto in = open_in(learned_in);
            std::vector<AbstractionReport> reports;
            const auto imdps = abstract_modes(c, read_learned(in), true, &reports);
            for (std::size_t i = 0; i < imdps.size(); ++i) {
                report_abstraction(imdps[i], reports[i]);
                auto out = open_out(eta_path(imdp_path, c, i));
                write_imdp(out, imdps[i]);
            }
        } else if (synth->parsed()) {
            auto in = open_in(imdp_in);
            const Imdp imdp = read_imdp(in);
            const Synthesis s = synthesize_imdp(c, imdp);
            const Tally t = tally(s);
            fmt::print(stderr, "yes {} no {} maybe {} mean p_lower {:.6f}, {} sweeps, residual {:.3g}\n", t.yes, t.no,
                       t.maybe, t.mean_lower, s.result.sweeps, s.result.residual);
            auto out = open_out(result_path);
            write_result(out, s.pimdp, imdp.partition(), s.result);
            if (!heatmap_path.empty()) {
                auto h = open_out(heatmap_path);
                write_heatmap_csv(h, s.pimdp, imdp.partition(), s.result);
            }
            if (!dfa_path.empty()) {
                auto d = open_out(dfa_path);
                ltlf::write_dfa(d, s.dfa);
            }
        } else if (validate->parsed()) {
            auto in = open_in(imdp_in);
            const Partition partition = read_imdp(in).partition();
            auto rin = open_in(result_in);
            const StoredResult stored = read_result(rin);
            const ltlf::Dfa dfa = make_dfa(c);
            if (stored.dfa_states != dfa.num_states) throw ConfigError("result was computed for another formula");
            const Scenario sc = make_scenario(c.scenario);
            const auto report = validate_yes_cells(c, sc.truth, partition, dfa, stored);
            if (report_path.empty()) {
                write_validation(std::cout, report);
            } else {
                auto out = open_out(report_path);
                write_validation(out, report);
            }
            if (!trace_path.empty() && !report.cells.empty()) {
                const Controller controller(partition, dfa, stored.modes);
                const auto trace = simulate(sc.truth, controller, report.cells[0].x0, c.validate_max_steps,
                                            c.validate_seed + 1, 0);
                auto out = open_out(trace_path);
                write_trace_csv(out, trace);
            }
        } else if (sweep->parsed()) {
            RunConfig sc = c;
            if (sc.eta_fractions.empty()) sc.eta_fractions = {0.5, 0.75, 0.95, 0.99};
            auto in = open_in(learned_in);
            const auto imdps = abstract_modes(sc, read_learned(in));
            auto out = open_out(sweep_out);
            out << "fraction,eta,yes,no,maybe,mean_p_lower\n";
            for (std::size_t i = 0; i < imdps.size(); ++i) {
                const Synthesis s = synthesize_imdp(sc, imdps[i]);
                const Tally t = tally(s);
                out << fmt::format("{:g},{:.17g},{},{},{},{:.17g}\n", sc.eta_fractions[i], imdps[i].eta().eta[0],
                                   t.yes, t.no, t.maybe, t.mean_lower);
                fmt::print(stderr, "fraction {:g}: mean p_lower {:.6f}\n", sc.eta_fractions[i], t.mean_lower);
            }
        }
    } catch (const ConfigError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        fmt::print(stderr, "numeric error: {}\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        fmt::print(stderr, "invalid input: {}\n", e.what());
        return 2;
    }
    return 0;
}
