#pragma once

#include <random>

#include "swsynth/ltlf.hpp"

namespace swsynth::test {

inline ltlf::Formula random_formula(std::mt19937_64& rng, const std::vector<std::string>& ap, int depth) {
    using namespace ltlf;
    std::uniform_int_distribution<int> leaf(0, static_cast<int>(ap.size()) + 1);
    if (depth == 0) {
        const int k = leaf(rng);
        if (k == 0) return make_true();
        if (k == 1) return make_false();
        return make_atom(ap[k - 2]);
    }
    std::uniform_int_distribution<int> op(0, 8);
    switch (op(rng)) {
        case 0: return random_formula(rng, ap, 0);
        case 1: return make_not(random_formula(rng, ap, depth - 1));
        case 2: return make_and({random_formula(rng, ap, depth - 1), random_formula(rng, ap, depth - 1)});
        case 3: return make_or({random_formula(rng, ap, depth - 1), random_formula(rng, ap, depth - 1)});
        case 4: return make_next(random_formula(rng, ap, depth - 1));
        case 5: return make_until(random_formula(rng, ap, depth - 1), random_formula(rng, ap, depth - 1));
        case 6: return make_eventually(random_formula(rng, ap, depth - 1));
        case 7: return make_globally(random_formula(rng, ap, depth - 1));
        default: return make_and({random_formula(rng, ap, depth - 1), make_not(random_formula(rng, ap, depth - 1))});
    }
}

inline ltlf::Trace random_trace(std::mt19937_64& rng, std::size_t num_ap, std::size_t max_len) {
    std::uniform_int_distribution<std::size_t> len(0, max_len);
    std::uniform_int_distribution<ltlf::Symbol> sym(0, (1u << num_ap) - 1);
    ltlf::Trace t(len(rng));
    for (auto& s : t) s = sym(rng);
    return t;
}

}  // namespace swsynth::test
