#include "swsynth/truth.hpp"

#include <cmath>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

namespace swsynth {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

Vector sample_noise(const NoiseModel& noise, std::size_t dim, Rng& rng) {
    Vector v(dim, 0.0);
    if (noise.bound == 0) return v;
    switch (noise.kind) {
        case NoiseKind::truncated_gaussian: {
            boost::random::normal_distribution<double> normal(0.0, noise.std_dev);
            for (auto& x : v) {
                do {
                    x = normal(rng);
                } while (std::abs(x) > noise.bound);
            }
            break;
        }
        case NoiseKind::bounded_uniform: {
            boost::random::uniform_real_distribution<double> uni(-noise.bound, noise.bound);
            for (auto& x : v) x = uni(rng);
            break;
        }
    }
    return v;
}

Vector Truth::step(std::span<const double> x, int mode, Rng& rng) const {
    Vector next = drift(x, mode);
    const Vector v = sample_noise(noise, dim, rng);
    for (std::size_t i = 0; i < dim; ++i) next[i] += v[i];
    return next;
}

}  // namespace swsynth
