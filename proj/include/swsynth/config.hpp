#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "swsynth/abstraction.hpp"
#include "swsynth/ltlf.hpp"
#include "swsynth/synthesis.hpp"

namespace swsynth {

/// Every free parameter of a run. Defaults reproduce the three-mode linear
/// case study; a config file only lists what it changes.
struct RunConfig {
    std::string scenario = "linear3";
    std::size_t samples_per_mode = 200;
    std::uint64_t seed = 1;

    Box domain{{-2, -2}, {2, 2}};
    Vector grid_step{0.125, 0.125};
    std::vector<LabeledRegion> regions;
    std::string formula = "G !obs & F des";
    std::vector<std::string> unused_labels;
    double threshold = 0.95;

    KnownDynamics known;
    std::vector<Kernel> kernels{Kernel{100.0, {2.0}}};  // one for all modes, or one per mode
    double rkhs_kappa = 2.0;
    std::vector<Vector> rkhs_bounds;       // per mode, empty for the heuristic
    std::vector<Vector> info_gain_bounds;  // per mode, empty for the realized gain
    NoiseModel noise = NoiseModel::truncated_gaussian(0.01, 0.01);

    double delta0 = 0.01;
    double delta_min = 1e-6;
    double sparsity_floor = 1e-12;
    int refinement_depth = 2;
    LambdaMaxMode lambda_max = LambdaMaxMode::row_sum;
    double eta_coverage = 1.0;
    Vector eta_fractions;  // each one is a separate abstraction, applied to every dimension

    double tol = 1e-6;
    std::size_t max_sweeps = 100'000;
    std::size_t dfa_state_budget = 1'000'000;

    std::size_t validate_cells = 10;
    std::size_t validate_trials = 1000;
    std::size_t validate_max_steps = 100;
    std::uint64_t validate_seed = 7;

    RunConfig();

    std::size_t dim() const { return domain.dim(); }
    std::size_t num_modes() const { return known.size(); }
    const Kernel& kernel(std::size_t mode_index) const;
};

/// Unknown keys and inconsistent values are ConfigError.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& c);

struct ConfigKey {
    std::string key;
    std::string default_value;
    std::string meaning;
};
/// Every accepted key with its default, for --help.
std::vector<ConfigKey> config_reference();

Partition make_partition(const RunConfig& c);
ltlf::Formula make_formula(const RunConfig& c);
/// Automaton over the formula's propositions in sorted order.
ltlf::Dfa make_dfa(const RunConfig& c);
LearnOptions learn_options(const RunConfig& c, std::size_t mode_index);
AbstractionOptions abstraction_options(const RunConfig& c);
IviOptions ivi_options(const RunConfig& c);

/// The coverage-based radius, or one radius per entry of eta_fractions.
std::vector<EtaChoice> eta_choices(const RunConfig& c);

}  // namespace swsynth
