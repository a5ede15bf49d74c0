#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>

#include "swsynth/geometry.hpp"
#include "swsynth/learning.hpp"

namespace swsynth {

using Rng = std::mt19937_64;

/// Generator for one independent stream: seed and stream index are mixed
/// through seed_seq, so streams do not depend on evaluation order.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// One draw of the per-dimension i.i.d. noise.
Vector sample_noise(const NoiseModel& noise, std::size_t dim, Rng& rng);

/// Ground-truth dynamics x+ = drift(x, u) + v. Only data generation and
/// validation see this; the synthesis pipeline works from data.
struct Truth {
    std::size_t dim = 0;
    int modes = 0;
    std::function<Vector(std::span<const double>, int)> drift;
    NoiseModel noise;

    Vector step(std::span<const double> x, int mode, Rng& rng) const;
};

}  // namespace swsynth
