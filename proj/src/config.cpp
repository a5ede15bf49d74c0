#include "swsynth/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "swsynth/errors.hpp"

namespace swsynth {

namespace {

const std::map<std::string, std::string>& meanings() {
    static const std::map<std::string, std::string> m{
        {"scenario", "ground-truth system for gen-data and validate (linear3, nonlin4)"},
        {"samples_per_mode", "gen-data: samples per mode"},
        {"seed", "gen-data: random seed"},
        {"domain", "safe set X as {lower, upper}"},
        {"grid_step", "cell width per dimension; must divide the domain"},
        {"regions", "labeled boxes [{label, lower, upper}], aligned with the grid"},
        {"formula", "LTLf specification over region labels"},
        {"unused_labels", "region labels deliberately absent from the formula"},
        {"threshold", "probability threshold for the yes/no classes"},
        {"known", "known part f_u per mode: {kind: zero|identity|linear, matrix}"},
        {"kernel", "squared-exponential kernel {signal_variance, length_scale}, or one per mode"},
        {"rkhs_kappa", "RKHS bound heuristic B = kappa * max |y|"},
        {"rkhs_bounds", "explicit B per mode and output dimension; overrides rkhs_kappa"},
        {"info_gain_bounds", "upper bounds on gamma per mode and output dimension"},
        {"noise", "process noise {kind: truncated_gaussian|uniform, std, bound, theta}"},
        {"delta0", "regression failure probability for the fallback epsilon"},
        {"delta_min", "smallest failure probability used when inverting confidence"},
        {"sparsity_floor", "transition upper bounds below this are not stored"},
        {"refinement_depth", "bisection depth for posterior bounds over a cell"},
        {"lambda_max", "Gram eigenvalue bound: row_sum or exact"},
        {"eta_coverage", "probability mass the noise radius must cover"},
        {"eta_fractions", "noise radii as fractions of the noise bound; one abstraction each"},
        {"tol", "value iteration stopping tolerance (sup norm)"},
        {"max_sweeps", "value iteration sweep cap"},
        {"dfa_state_budget", "cap on automaton construction states"},
        {"validate_cells", "validate: number of yes cells sampled"},
        {"validate_trials", "validate: simulations per cell"},
        {"validate_max_steps", "validate: steps before a run counts as truncated"},
        {"validate_seed", "validate: random seed"},
    };
    return m;
}

template <class T>
T get(const nlohmann::json& j, const char* key) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
    }
}

Box box_of(const nlohmann::json& j, const char* key) {
    for (const auto& [k, _] : j.items()) {
        if (k != "lower" && k != "upper" && k != "label") throw ConfigError(fmt::format("unknown key '{}' in {}", k, key));
    }
    try {
        return Box(j.at("lower").get<Vector>(), j.at("upper").get<Vector>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
    }
}

void check(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

void validate(const RunConfig& c) {
    const std::size_t n = c.dim();
    check(n > 0, "domain must have at least one dimension");
    check(c.grid_step.size() == n, "grid_step must have one entry per dimension");
    check(!c.known.empty(), "at least one mode is required in 'known'");
    check(c.kernels.size() == 1 || c.kernels.size() == c.num_modes(), "give one kernel, or one per mode");
    for (const auto& k : c.kernels) k.validate(n);
    check(c.rkhs_bounds.empty() || c.rkhs_bounds.size() == c.num_modes(), "rkhs_bounds needs one entry per mode");
    for (const auto& b : c.rkhs_bounds) check(b.size() == n, "rkhs_bounds entries need one value per dimension");
    check(c.info_gain_bounds.empty() || c.info_gain_bounds.size() == c.num_modes(),
          "info_gain_bounds needs one entry per mode");
    for (const auto& b : c.info_gain_bounds) check(b.size() == n, "info_gain_bounds entries need one value per dimension");
    check(c.threshold >= 0 && c.threshold <= 1, "threshold must lie in [0, 1]");
    check(c.delta0 > 0 && c.delta0 < 1, "delta0 must lie in (0, 1)");
    check(c.delta_min > 0 && c.delta_min <= c.delta0, "delta_min must lie in (0, delta0]");
    check(c.sparsity_floor >= 0 && c.sparsity_floor < 1, "sparsity_floor must lie in [0, 1)");
    check(c.refinement_depth >= 0 && c.refinement_depth <= 12, "refinement_depth must lie in [0, 12]");
    check(c.rkhs_kappa > 0, "rkhs_kappa must be positive");
    check(c.eta_coverage > 0 && c.eta_coverage <= 1, "eta_coverage must lie in (0, 1]");
    for (double f : c.eta_fractions) check(f >= 0 && f <= 1, "eta_fractions must lie in [0, 1]");
    check(c.tol > 0, "tol must be positive");
    check(c.max_sweeps > 0 && c.dfa_state_budget > 0, "max_sweeps and dfa_state_budget must be positive");
    check(c.validate_trials > 0, "validate_trials must be positive");
    for (const auto& r : c.regions) check(r.box.dim() == n, fmt::format("region '{}' has the wrong dimension", r.label));

    const auto atoms = ltlf::atoms(make_formula(c));
    for (const auto& r : c.regions) {
        const bool used = std::find(atoms.begin(), atoms.end(), r.label) != atoms.end();
        const bool declared = std::find(c.unused_labels.begin(), c.unused_labels.end(), r.label) != c.unused_labels.end();
        check(used || declared, fmt::format("region label '{}' is not in the formula nor in unused_labels", r.label));
    }
    for (const auto& a : atoms) {
        const bool defined =
            std::any_of(c.regions.begin(), c.regions.end(), [&](const LabeledRegion& r) { return r.label == a; });
        check(defined, fmt::format("formula proposition '{}' has no region", a));
    }
}

}  // namespace

RunConfig::RunConfig() {
    regions = {{Box({-0.5, -0.5}, {0.5, 0.5}), "des"},
               {Box({0.75, -0.75}, {1.25, 0.25}), "obs"},
               {Box({-1.25, 0.5}, {-0.75, 1.0}), "obs"}};
    known = KnownDynamics(3, KnownMap::zero(2));
}

const Kernel& RunConfig::kernel(std::size_t mode_index) const {
    return kernels.size() == 1 ? kernels[0] : kernels.at(mode_index);
}

RunConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    const auto& keys = meanings();
    for (const auto& [key, _] : j.items()) {
        if (!keys.count(key)) throw ConfigError(fmt::format("unknown config key '{}'", key));
    }
    RunConfig c;
    auto has = [&](const char* k) { return j.contains(k); };
    if (has("scenario")) c.scenario = get<std::string>(j["scenario"], "scenario");
    if (has("samples_per_mode")) c.samples_per_mode = get<std::size_t>(j["samples_per_mode"], "samples_per_mode");
    if (has("seed")) c.seed = get<std::uint64_t>(j["seed"], "seed");
    if (has("domain")) c.domain = box_of(j["domain"], "domain");
    if (has("grid_step")) c.grid_step = get<Vector>(j["grid_step"], "grid_step");
    if (has("regions")) {
        c.regions.clear();
        for (const auto& r : j["regions"]) {
            if (!r.contains("label")) throw ConfigError("every region needs a label");
            c.regions.push_back({box_of(r, "regions"), get<std::string>(r["label"], "regions")});
        }
    }
    if (has("formula")) c.formula = get<std::string>(j["formula"], "formula");
    if (has("unused_labels")) c.unused_labels = get<std::vector<std::string>>(j["unused_labels"], "unused_labels");
    if (has("threshold")) c.threshold = get<double>(j["threshold"], "threshold");
    if (has("known")) {
        c.known.clear();
        const auto n = c.dim();
        for (const auto& k : j["known"]) c.known.push_back(known_map_from_json(k, n));
    } else if (c.dim() != 2) {
        c.known = KnownDynamics(3, KnownMap::zero(c.dim()));
    }
    if (has("kernel")) {
        c.kernels.clear();
        const auto& k = j["kernel"];
        if (k.is_array()) {
            for (const auto& e : k) c.kernels.push_back(kernel_from_json(e));
        } else {
            c.kernels.push_back(kernel_from_json(k));
        }
    }
    if (has("rkhs_kappa")) c.rkhs_kappa = get<double>(j["rkhs_kappa"], "rkhs_kappa");
    if (has("rkhs_bounds") && !j["rkhs_bounds"].is_null()) {
        c.rkhs_bounds = get<std::vector<Vector>>(j["rkhs_bounds"], "rkhs_bounds");
    }
    if (has("info_gain_bounds") && !j["info_gain_bounds"].is_null()) {
        c.info_gain_bounds = get<std::vector<Vector>>(j["info_gain_bounds"], "info_gain_bounds");
    }
    if (has("noise")) c.noise = noise_from_json(j["noise"]);
    if (has("delta0")) c.delta0 = get<double>(j["delta0"], "delta0");
    if (has("delta_min")) c.delta_min = get<double>(j["delta_min"], "delta_min");
    if (has("sparsity_floor")) c.sparsity_floor = get<double>(j["sparsity_floor"], "sparsity_floor");
    if (has("refinement_depth")) c.refinement_depth = get<int>(j["refinement_depth"], "refinement_depth");
    if (has("lambda_max")) {
        const auto m = get<std::string>(j["lambda_max"], "lambda_max");
        if (m == "row_sum") {
            c.lambda_max = LambdaMaxMode::row_sum;
        } else if (m == "exact") {
            c.lambda_max = LambdaMaxMode::exact;
        } else {
            throw ConfigError(fmt::format("lambda_max must be row_sum or exact, not '{}'", m));
        }
    }
    if (has("eta_coverage")) c.eta_coverage = get<double>(j["eta_coverage"], "eta_coverage");
    if (has("eta_fractions")) c.eta_fractions = get<Vector>(j["eta_fractions"], "eta_fractions");
    if (has("tol")) c.tol = get<double>(j["tol"], "tol");
    if (has("max_sweeps")) c.max_sweeps = get<std::size_t>(j["max_sweeps"], "max_sweeps");
    if (has("dfa_state_budget")) c.dfa_state_budget = get<std::size_t>(j["dfa_state_budget"], "dfa_state_budget");
    if (has("validate_cells")) c.validate_cells = get<std::size_t>(j["validate_cells"], "validate_cells");
    if (has("validate_trials")) c.validate_trials = get<std::size_t>(j["validate_trials"], "validate_trials");
    if (has("validate_max_steps")) c.validate_max_steps = get<std::size_t>(j["validate_max_steps"], "validate_max_steps");
    if (has("validate_seed")) c.validate_seed = get<std::uint64_t>(j["validate_seed"], "validate_seed");
    validate(c);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path));
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(fmt::format("config '{}': {}", path, e.what()));
    }
    return parse_config(j);
}

nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j;
    j["scenario"] = c.scenario;
    j["samples_per_mode"] = c.samples_per_mode;
    j["seed"] = c.seed;
    j["domain"] = {{"lower", c.domain.lower()}, {"upper", c.domain.upper()}};
    j["grid_step"] = c.grid_step;
    j["regions"] = nlohmann::json::array();
    for (const auto& r : c.regions) {
        j["regions"].push_back({{"label", r.label}, {"lower", r.box.lower()}, {"upper", r.box.upper()}});
    }
    j["formula"] = c.formula;
    j["unused_labels"] = c.unused_labels;
    j["threshold"] = c.threshold;
    j["known"] = nlohmann::json::array();
    for (const auto& k : c.known) j["known"].push_back(to_json(k));
    if (c.kernels.size() == 1) {
        j["kernel"] = to_json(c.kernels[0]);
    } else {
        j["kernel"] = nlohmann::json::array();
        for (const auto& k : c.kernels) j["kernel"].push_back(to_json(k));
    }
    j["rkhs_kappa"] = c.rkhs_kappa;
    j["rkhs_bounds"] = c.rkhs_bounds.empty() ? nlohmann::json(nullptr) : nlohmann::json(c.rkhs_bounds);
    j["info_gain_bounds"] = c.info_gain_bounds.empty() ? nlohmann::json(nullptr) : nlohmann::json(c.info_gain_bounds);
    j["noise"] = to_json(c.noise);
    j["delta0"] = c.delta0;
    j["delta_min"] = c.delta_min;
    j["sparsity_floor"] = c.sparsity_floor;
    j["refinement_depth"] = c.refinement_depth;
    j["lambda_max"] = c.lambda_max == LambdaMaxMode::row_sum ? "row_sum" : "exact";
    j["eta_coverage"] = c.eta_coverage;
    j["eta_fractions"] = c.eta_fractions;
    j["tol"] = c.tol;
    j["max_sweeps"] = c.max_sweeps;
    j["dfa_state_budget"] = c.dfa_state_budget;
    j["validate_cells"] = c.validate_cells;
    j["validate_trials"] = c.validate_trials;
    j["validate_max_steps"] = c.validate_max_steps;
    j["validate_seed"] = c.validate_seed;
    return j;
}

std::vector<ConfigKey> config_reference() {
    const nlohmann::json defaults = to_json(RunConfig{});
    std::vector<ConfigKey> out;
    for (const auto& [key, meaning] : meanings()) out.push_back({key, defaults.at(key).dump(), meaning});
    return out;
}

Partition make_partition(const RunConfig& c) { return build_partition(c.domain, c.regions, c.grid_step); }

ltlf::Formula make_formula(const RunConfig& c) { return ltlf::parse(c.formula); }

ltlf::Dfa make_dfa(const RunConfig& c) {
    const auto f = make_formula(c);
    auto ap = ltlf::atoms(f);
    std::sort(ap.begin(), ap.end());
    return ltlf::to_dfa(f, ap, c.dfa_state_budget);
}

LearnOptions learn_options(const RunConfig& c, std::size_t mode_index) {
    LearnOptions o;
    o.rkhs_kappa = c.rkhs_kappa;
    if (!c.rkhs_bounds.empty()) o.rkhs_bounds = c.rkhs_bounds.at(mode_index);
    if (!c.info_gain_bounds.empty()) o.info_gain_bounds = c.info_gain_bounds.at(mode_index);
    return o;
}

AbstractionOptions abstraction_options(const RunConfig& c) {
    AbstractionOptions o;
    o.delta0 = c.delta0;
    o.delta_min = c.delta_min;
    o.sparsity_floor = c.sparsity_floor;
    o.bounds.refinement_depth = c.refinement_depth;
    o.bounds.lambda_max = c.lambda_max;
    return o;
}

IviOptions ivi_options(const RunConfig& c) {
    IviOptions o;
    o.tol = c.tol;
    o.max_sweeps = c.max_sweeps;
    return o;
}

std::vector<EtaChoice> eta_choices(const RunConfig& c) {
    if (c.eta_fractions.empty()) return {choose_eta(c.noise, c.dim(), c.eta_coverage)};
    std::vector<EtaChoice> out;
    for (double f : c.eta_fractions) out.push_back(eta_from_fractions(c.noise, Vector(c.dim(), f)));
    return out;
}

}  // namespace swsynth
