// End-to-end acceptance run. Usage: acceptance <swsynth executable> <configs dir>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <fmt/format.h>
#include <omp.h>
#include <unistd.h>

#include "oracles/ivi_random.hpp"
#include "oracles/ltlf_random.hpp"
#include "swsynth/pipeline.hpp"
#include "swsynth/scenario.hpp"

using namespace swsynth;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
    fmt::print("[{}] {}. {}: {}\n", pass ? "PASS" : "FAIL", id, what, detail);
    std::fflush(stdout);
    if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Run {
    RunConfig config;
    std::vector<LearnedMode> learned;
    std::optional<Imdp> imdp;
    std::optional<Synthesis> synthesis;
};

Run run_config(const RunConfig& c) {
    Run r{c, {}, std::nullopt, std::nullopt};
    const Scenario sc = make_scenario(c.scenario);
    r.learned = learn_modes(c, generate_dataset(sc, c.samples_per_mode, c.seed));
    r.imdp.emplace(std::move(abstract_modes(c, r.learned).at(0)));
    r.synthesis.emplace(synthesize_imdp(c, *r.imdp));
    return r;
}

StoredResult stored(const Synthesis& s, const Partition& partition) {
    std::stringstream ss;
    write_result(ss, s.pimdp, partition, s.result);
    return read_result(ss);
}

// p_lower <= p_upper <= p_upper_star on every product state, gap >= 0 on every cell.
std::string sandwich_violations(const Synthesis& s, std::size_t& bad) {
    const auto& r = s.result;
    double worst = 0.0;
    for (std::size_t z = 0; z < s.pimdp.num_states; ++z) {
        const double d = std::max(r.p_lower[z] - r.p_upper[z], r.p_upper[z] - r.p_upper_star[z]);
        worst = std::max(worst, d);
        bad += d > 1e-9;
    }
    for (double g : r.gap) bad += g < 0.0;
    return fmt::format("max violation {:.2e}", worst);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        fmt::print(stderr, "usage: acceptance <swsynth executable> <configs dir>\n");
        return 2;
    }
    const std::string cli = argv[1];
    const fs::path configs = argv[2];
    omp_set_num_threads(1);

    // 1. Linear case study
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig linear = load_config((configs / "linear3.json").string());
    const Run lin = run_config(linear);
    const double elapsed = seconds_since(t0);
    const Partition& part = lin.imdp->partition();
    const Synthesis& syn = *lin.synthesis;
    {
        std::size_t des = 0, des_ok = 0, obs = 0, obs_ok = 0, yes = 0, yes_outside = 0;
        for (CellIndex q = 0; q < part.num_cells(); ++q) {
            const CellClass k = syn.result.classes[q];
            yes += k == CellClass::yes;
            if (part.has_label(q, "des")) {
                ++des;
                des_ok += k == CellClass::yes && syn.result.lower(syn.pimdp, q) == 1.0;
            } else {
                yes_outside += k == CellClass::yes;
            }
            if (part.has_label(q, "obs")) {
                ++obs;
                obs_ok += k == CellClass::no && syn.result.upper(syn.pimdp, q) == 0.0;
            }
        }
        const bool pass = part.num_cells() == 1024 && des > 0 && des_ok == des && obs > 0 && obs_ok == obs &&
                          yes_outside > 0 && elapsed <= 600.0;
        report(1, pass, "linear case study",
               fmt::format("{} cells; Des yes with p_lower=1: {}/{}; Obs no with p_upper=0: {}/{}; yes {} "
                           "({} outside Des); {:.1f} s single-threaded",
                           part.num_cells(), des_ok, des, obs_ok, obs, yes, yes_outside, elapsed));
    }

    // 2. Transition-bound soundness against the ground truth
    {
        const Truth truth = make_scenario("linear3").truth;
        struct Triple {
            CellIndex q;
            int mode;
            ImdpRow::Entry e;
        };
        std::vector<Triple> all;
        for (CellIndex q = 0; q < part.num_cells(); ++q) {
            for (int u = 1; u <= static_cast<int>(lin.imdp->num_actions()); ++u) {
                for (const auto& e : lin.imdp->row(q, u).entries) {
                    if (e.hi > 0.0) all.push_back({q, u, e});
                }
            }
        }
        Rng pick = make_rng(2, 0);
        std::size_t ok = 0;
        std::string worst;
        double worst_excess = -1.0;
        for (int t = 0; t < 20; ++t) {
            boost::random::uniform_int_distribution<std::size_t> idx(0, all.size() - 1);
            const Triple tr = all[idx(pick)];
            const Box cell = part.cell(tr.q);
            Rng rng = make_rng(2, static_cast<std::uint64_t>(t) + 1);
            std::size_t hits = 0;
            for (int i = 0; i < 100; ++i) {
                Vector x(cell.dim());
                for (std::size_t d = 0; d < x.size(); ++d) {
                    x[d] = boost::random::uniform_real_distribution<double>(cell.lower(d), cell.upper(d))(rng);
                }
                hits += part.locate(truth.step(x, tr.mode, rng)) == tr.e.target;
            }
            const double freq = static_cast<double>(hits) / 100.0;
            const double hw = wilson(hits, 100).half_width;
            const double excess = std::max(tr.e.lo - hw - freq, freq - tr.e.hi - hw);
            ok += excess <= 1e-12;
            if (excess > worst_excess) {
                worst_excess = excess;
                worst = fmt::format("q={} u={} q'={} [{:.4g}, {:.4g}] freq {:.2f}", tr.q, tr.mode, tr.e.target,
                                    tr.e.lo, tr.e.hi, freq);
            }
        }
        report(2, ok >= 19, "transition-bound soundness",
               fmt::format("{}/20 triples within Wilson-widened bounds (from {} explicit entries); tightest: {}", ok,
                           all.size(), worst));
    }

    // 3. LTLf automata against the recursive semantics
    {
        const auto t = std::chrono::steady_clock::now();
        std::mt19937_64 rng(3);
        const std::vector<std::string> names{"a", "b", "c"};
        std::size_t checks = 0, agree = 0;
        for (int f = 0; f < 500; ++f) {
            const std::size_t n = 1 + static_cast<std::size_t>(f % 3);
            const std::vector<std::string> ap(names.begin(), names.begin() + static_cast<long>(n));
            const auto formula = test::random_formula(rng, ap, 4);
            const auto dfa = ltlf::to_dfa(formula, ap);
            for (int k = 0; k < 200; ++k) {
                const auto rho = test::random_trace(rng, n, 8);
                ++checks;
                agree += dfa.accepts(rho) == ltlf::evaluate(formula, rho, 0, ap);
            }
        }
        const double s = seconds_since(t);
        report(3, agree == checks && checks == 100'000 && s <= 60.0, "LTLf oracle equivalence",
               fmt::format("{}/{} agree in {:.1f} s", agree, checks, s));
    }

    // 4. Interval value iteration against vertex enumeration
    {
        std::mt19937_64 rng(4);
        const IviOptions tight{1e-13, 200'000, true};
        double worst = 0.0;
        for (int t = 0; t < 50; ++t) {
            const auto p = test::random_pimdp(rng);
            const auto lo = interval_value_iteration(p, Objective::maximin, tight);
            const auto hi = interval_value_iteration(p, Objective::maximax, tight);
            const auto ref_lo = test::brute_force_values(p, Direction::minimize);
            const auto ref_hi = test::brute_force_values(p, Direction::maximize);
            for (std::size_t z = 0; z < p.num_states; ++z) {
                worst = std::max({worst, std::abs(lo.values[z] - ref_lo[z]), std::abs(hi.values[z] - ref_hi[z])});
            }
        }
        report(4, worst <= 1e-9, "value iteration oracle", fmt::format("50 models, max deviation {:.2e}", worst));
    }

    // 6. Noise-radius sweep (its syntheses also feed 5)
    std::vector<Synthesis> sweeps;
    {
        RunConfig c = linear;
        c.eta_fractions = {0.99, 0.95, 0.75, 0.5};
        const auto imdps = abstract_modes(c, lin.learned);
        std::vector<double> means;
        bool monotone = true;
        for (const auto& imdp : imdps) {
            sweeps.push_back(synthesize_imdp(c, imdp));
            double m = 0.0;
            for (CellIndex q = 0; q < part.num_cells(); ++q) m += sweeps.back().result.lower(sweeps.back().pimdp, q);
            means.push_back(m / static_cast<double>(part.num_cells()));
            if (means.size() > 1 && means.back() > means[means.size() - 2]) monotone = false;
        }
        report(6, monotone, "noise-radius sweep",
               fmt::format("mean p_lower at eta = 0.99/0.95/0.75/0.5 of the bound: {:.4f} {:.4f} {:.4f} {:.4f}",
                           means[0], means[1], means[2], means[3]));
    }

    // 5. Sandwich on every synthesized scenario, small gaps on the nonlinear one
    {
        const Run non = run_config(load_config((configs / "nonlin4.json").string()));
        const RunConfig multi = load_config((configs / "nonlin4_multi.json").string());
        const Imdp relabeled(make_partition(multi), non.imdp->num_actions(), non.imdp->eta(), non.imdp->rows());
        const Synthesis syn3 = synthesize_imdp(multi, relabeled);

        std::size_t bad = 0;
        std::string detail = "linear " + sandwich_violations(syn, bad);
        for (const auto& s : sweeps) sandwich_violations(s, bad);
        detail += ", nonlinear " + sandwich_violations(*non.synthesis, bad);
        detail += ", three-region " + sandwich_violations(syn3, bad);

        const Partition& np = non.imdp->partition();
        std::size_t small = 0, small_outside = 0;
        for (CellIndex q = 0; q < np.num_cells(); ++q) {
            if (non.synthesis->result.gap[q] <= 0.05) {
                ++small;
                small_outside += !np.has_label(q, "des");
            }
        }
        report(5, bad == 0 && small_outside > 0, "sandwich and gap",
               fmt::format("{} violations over 7 syntheses ({}); nonlinear F des: {} cells with gap <= 0.05, "
                           "{} of them outside Des",
                           bad, detail, small, small_outside));
    }

    // 7. Monte Carlo on yes cells
    {
        const Truth truth = make_scenario("linear3").truth;
        const auto rep = validate_yes_cells(linear, truth, part, syn.dfa, stored(syn, part));
        std::size_t ok = 0;
        double min_rate = 1.0;
        for (const auto& v : rep.cells) {
            ok += v.mc.rate >= v.p_lower - v.mc.interval.half_width;
            min_rate = std::min(min_rate, v.mc.rate);
        }
        report(7, rep.cells.size() == 10 && ok >= 9, "Monte Carlo consistency",
               fmt::format("{}/{} yes cells with rate >= p_lower - Wilson half-width ({} trials each, min rate "
                           "{:.3f})",
                           ok, rep.cells.size(), linear.validate_trials, min_rate));
    }

    // 8. Byte-identical stage outputs for any thread count
    {
        const fs::path dir = fs::temp_directory_path() / fmt::format("swsynth-acceptance-{}", ::getpid());
        fs::create_directories(dir);
        const std::string cfg = (configs / "linear3.json").string();
        auto sh = [&](const std::string& args) {
            const std::string cmd = fmt::format("\"{}\" {} 2>/dev/null", cli, args);
            return std::system(cmd.c_str()) == 0;
        };
        auto p = [&](const std::string& name) { return (dir / name).string(); };
        bool ran = sh(fmt::format("gen-data --config {} --out {}", cfg, p("data.csv")));
        for (int threads : {1, 2, 4}) {
            const auto tag = std::to_string(threads);
            ran = ran &&
                  sh(fmt::format("--threads {} learn --config {} --data {} --out {}", threads, cfg, p("data.csv"),
                                 p("learned" + tag))) &&
                  sh(fmt::format("--threads {} abstract --config {} --learned {} --out {}", threads, cfg,
                                 p("learned" + tag), p("imdp" + tag))) &&
                  sh(fmt::format("--threads {} synthesize --config {} --imdp {} --out {} --heatmap {}", threads,
                                 cfg, p("imdp" + tag), p("result" + tag), p("heat" + tag)));
        }
        ran = ran && sh(fmt::format("--threads 4 synthesize --config {} --imdp {} --out {}", cfg, p("imdp1"),
                                    p("result_again")));
        std::size_t same = 0, compared = 0;
        if (ran) {
            for (const char* stem : {"learned", "imdp", "result", "heat"}) {
                const auto ref = slurp(dir / (std::string(stem) + "1"));
                for (const char* t : {"2", "4"}) {
                    ++compared;
                    same += !ref.empty() && slurp(dir / (std::string(stem) + t)) == ref;
                }
            }
            ++compared;
            same += slurp(dir / "result_again") == slurp(dir / "result1");
        }
        fs::remove_all(dir);
        report(8, ran && same == compared, "determinism",
               ran ? fmt::format("{}/{} outputs byte-identical across 1, 2 and 4 threads", same, compared)
                   : "a CLI stage failed");
    }

    fmt::print("{} of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
