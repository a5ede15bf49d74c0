#pragma once

#include <string>
#include <vector>

#include "swsynth/dynamics.hpp"
#include "swsynth/truth.hpp"

namespace swsynth {

/// A named case-study system: the domain, the known part f_u handed to the
/// learner, and the hidden truth.
struct Scenario {
    std::string name;
    Box domain;
    KnownDynamics known;
    Truth truth;
};

/// "linear3" or "nonlin4"; throws ConfigError otherwise.
Scenario make_scenario(const std::string& name);
std::vector<std::string> scenario_names();

/// x uniform over the domain, x+ from the truth; modes in order 1..m.
Dataset generate_dataset(const Scenario& scenario, std::size_t samples_per_mode, std::uint64_t seed);

}  // namespace swsynth
