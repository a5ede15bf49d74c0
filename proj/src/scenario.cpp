#include "swsynth/scenario.hpp"

#include <cmath>

#include <boost/random/uniform_real_distribution.hpp>
#include <fmt/format.h>

#include "swsynth/errors.hpp"

namespace swsynth {

namespace {

Scenario linear3() {
    std::vector<Eigen::Matrix2d> a(3);
    a[0] << 0.4, 0.1, 0.0, 0.5;
    a[1] << 0.4, 0.5, 0.0, 0.5;
    a[2] << 0.4, 0.0, 0.5, 0.5;
    Scenario s;
    s.name = "linear3";
    s.domain = Box({-2, -2}, {2, 2});
    s.known = KnownDynamics(3, KnownMap::zero(2));
    s.truth.dim = 2;
    s.truth.modes = 3;
    s.truth.noise = NoiseModel::truncated_gaussian(0.01, 0.01);
    s.truth.drift = [a](std::span<const double> x, int u) {
        const auto& m = a.at(static_cast<std::size_t>(u - 1));
        return Vector{m(0, 0) * x[0] + m(0, 1) * x[1], m(1, 0) * x[0] + m(1, 1) * x[1]};
    };
    return s;
}

Scenario nonlin4() {
    Scenario s;
    s.name = "nonlin4";
    s.domain = Box({-2, -2}, {2, 2});
    s.known = KnownDynamics(4, KnownMap::identity(2));
    s.truth.dim = 2;
    s.truth.modes = 4;
    s.truth.noise = NoiseModel::truncated_gaussian(0.01, 0.01);
    s.truth.drift = [](std::span<const double> x, int u) {
        switch (u) {
            case 1: return Vector{x[0] + 0.5 + 0.2 * std::sin(x[1]), x[1] + 0.4 * std::cos(x[0])};
            case 2: return Vector{x[0] - 0.5 + 0.2 * std::sin(x[1]), x[1] + 0.4 * std::cos(x[0])};
            case 3: return Vector{x[0] + 0.4 * std::cos(x[1]), x[1] + 0.5 + 0.2 * std::sin(x[0])};
            case 4: return Vector{x[0] + 0.4 * std::cos(x[1]), x[1] - 0.5 + 0.2 * std::sin(x[0])};
        }
        throw std::invalid_argument("nonlin4: mode out of range");
    };
    return s;
}

}  // namespace

std::vector<std::string> scenario_names() { return {"linear3", "nonlin4"}; }

Scenario make_scenario(const std::string& name) {
    if (name == "linear3") return linear3();
    if (name == "nonlin4") return nonlin4();
    throw ConfigError(fmt::format("unknown scenario '{}' (known: linear3, nonlin4)", name));
}

Dataset generate_dataset(const Scenario& scenario, std::size_t samples_per_mode, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    const std::size_t n = scenario.truth.dim;
    Dataset data;
    data.reserve(samples_per_mode * static_cast<std::size_t>(scenario.truth.modes));
    for (int u = 1; u <= scenario.truth.modes; ++u) {
        for (std::size_t k = 0; k < samples_per_mode; ++k) {
            Vector x(n);
            for (std::size_t d = 0; d < n; ++d) {
                boost::random::uniform_real_distribution<double> uni(scenario.domain.lower(d), scenario.domain.upper(d));
                x[d] = uni(rng);
            }
            Vector xp = scenario.truth.step(x, u, rng);
            data.push_back({std::move(x), u, std::move(xp)});
        }
    }
    return data;
}

}  // namespace swsynth
