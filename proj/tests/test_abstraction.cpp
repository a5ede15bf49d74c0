#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "swsynth/abstraction.hpp"
#include "swsynth/errors.hpp"
#include "swsynth/scenario.hpp"

using namespace swsynth;

namespace {

LearnedMode prior_mode(std::size_t dim) {
    LearnedMode m;
    m.theta = 0.01;
    for (std::size_t i = 0; i < dim; ++i) m.outputs.push_back({GaussianProcess(Kernel{}, dim), 1.0});
    return m;
}

std::vector<LearnedMode> learn_all(const Scenario& sc, std::size_t per_mode, std::uint64_t seed) {
    const auto data = generate_dataset(sc, per_mode, seed);
    std::vector<LearnedMode> out;
    for (const auto& r : build_residuals(data, sc.known)) out.push_back(learn_mode(r, Kernel{1.0, {2.0}}, 0.01));
    return out;
}

bool same_rows(const Imdp& a, const Imdp& b) {
    if (a.rows().size() != b.rows().size()) return false;
    for (std::size_t i = 0; i < a.rows().size(); ++i) {
        const auto &x = a.rows()[i], &y = b.rows()[i];
        if (x.background_hi != y.background_hi || x.entries.size() != y.entries.size()) return false;
        for (std::size_t k = 0; k < x.entries.size(); ++k) {
            const auto &e = x.entries[k], &f = y.entries[k];
            if (e.target != f.target || e.lo != f.lo || e.hi != f.hi) return false;
        }
    }
    return true;
}

double wilson_half_width(double p, double n) {
    const double z = 2.5758293035489;
    return z / (1 + z * z / n) * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n));
}

}  // namespace

TEST_CASE("noise radius selection") {
    const auto tg = NoiseModel::truncated_gaussian(0.01, 0.01);
    const EtaChoice full = choose_eta(tg, 2, 1.0);
    CHECK(full.eta == Vector{0.01, 0.01});
    CHECK(full.p_eta == Vector{1.0, 1.0});

    const EtaChoice sweep = eta_from_fractions(tg, {0.75, 0.75});
    CHECK(sweep.eta[0] == doctest::Approx(0.0075));
    const double expect = std::erf(0.75 / std::sqrt(2.0)) / std::erf(1 / std::sqrt(2.0));
    CHECK(sweep.p_eta[1] == doctest::Approx(expect).epsilon(1e-12));

    const EtaChoice uni = choose_eta(NoiseModel::bounded_uniform(1.0), 1, 0.99);
    CHECK(uni.eta[0] == doctest::Approx(0.99).epsilon(1e-12));

    const EtaChoice two = choose_eta(NoiseModel::bounded_uniform(1.0), 2, 0.99);
    CHECK(two.p_eta[0] * two.p_eta[1] == doctest::Approx(0.99).epsilon(1e-12));

    CHECK_THROWS_AS(choose_eta(NoiseModel::truncated_gaussian(1.0, INFINITY), 2, 1.0), ConfigError);
    CHECK_THROWS_AS(choose_eta(tg, 2, 0.0), ConfigError);
}

TEST_CASE("transition interval cases") {
    const Box target({0, 0}, {1, 1});
    const EtaChoice eta{{0.01, 0.01}, {0.99, 0.99}};

    const auto disjoint = transition_interval(target, Box({3, 3}, {4, 4}), eta, {{0.0, 0.0}, {1.0, 1.0}});
    CHECK(disjoint.lo == 0.0);
    CHECK(disjoint.hi == 0.0);

    const auto inside = transition_interval(target, Box({0.4, 0.4}, {0.6, 0.6}), eta, {{0.01, 0.01}, {0.99, 0.99}});
    CHECK(inside.lo == doctest::Approx(0.96059601).epsilon(1e-14));
    CHECK(inside.hi == doctest::Approx(0.96069601).epsilon(1e-14));

    // meets the expanded box but not the reduced one
    const auto edge = transition_interval(target, Box({0.9, 0.4}, {1.05, 0.6}), eta, {{0.01, 0.01}, {0.99, 0.99}});
    CHECK(edge.lo == 0.0);
    CHECK(edge.hi == doctest::Approx(0.96069601).epsilon(1e-14));

    const auto far = transition_interval(target, Box({3, 3}, {4, 4}), eta, {{0.01, 0.01}, {0.99, 0.99}});
    CHECK(far.lo == 0.0);
    CHECK(far.hi == doctest::Approx(1e-4).epsilon(1e-12));
}

TEST_CASE("unsafe interval cases") {
    const Box domain({-2, -2}, {2, 2});
    const EtaChoice eta{{0.01, 0.01}, {0.99, 0.99}};
    const EpsChoice eps{{0.01, 0.01}, {0.99, 0.99}};

    const auto inside = unsafe_interval(domain, Box({0, 0}, {0.5, 0.5}), eta, eps);
    CHECK(inside.hi == doctest::Approx(1 - 0.96059601).epsilon(1e-12));
    CHECK(inside.lo == doctest::Approx(1 - 0.96059601 - 1e-4).epsilon(1e-12));

    const auto outside = unsafe_interval(domain, Box({5, 5}, {6, 6}), eta, eps);
    CHECK(outside.lo == doctest::Approx(1 - 1e-4).epsilon(1e-12));
    CHECK(outside.hi == 1.0);

    const auto exact = unsafe_interval(domain, Box({0, 0}, {0.5, 0.5}), {{0, 0}, {1, 1}}, {{0, 0}, {1, 1}});
    CHECK(exact.lo == 0.0);
    CHECK(exact.hi == 0.0);
}

TEST_CASE("epsilon selection") {
    const LearnedMode m = prior_mode(2);
    const EtaChoice eta{{0.01, 0.01}, {1, 1}};
    const AbstractionOptions opt;

    const auto zero = fallback_epsilon(m, {0.0, 0.0}, opt);
    CHECK(zero.eps == Vector{0.0, 0.0});
    CHECK(zero.p_eps[0] == 1 - 1e-6);

    const auto fb = fallback_epsilon(m, {0.1, 0.2}, opt);
    CHECK(fb.eps[1] == doctest::Approx(beta(m, 1, 0.01) * 0.2));
    CHECK(fb.p_eps[0] == 0.99);

    const Box target({0, 0}, {1, 1}), im({0.3, 0.45}, {0.5, 0.6});
    const auto c = containment_epsilon(target, im, eta, m, {0.0, 0.0}, opt);
    REQUIRE(c);
    CHECK(c->eps[0] == doctest::Approx(0.29).epsilon(1e-8));
    CHECK(c->eps[1] == doctest::Approx(0.39).epsilon(1e-8));
    CHECK(contained_in(im, reduce_box(target, Vector{c->eps[0] + 0.01, c->eps[1] + 0.01})));

    CHECK_FALSE(containment_epsilon(target, Box({0.995, 0.5}, {1.2, 0.6}), eta, m, {0.0, 0.0}, opt));

    // With sigma_sup 0 any eps has confidence 1 - delta_min, so containment wins.
    const auto chosen = choose_epsilon(target, im, eta, m, {0.0, 0.0}, opt);
    CHECK(chosen.eps == c->eps);
}

TEST_CASE("rows are consistent and parallel equals serial") {
    const auto sc = make_scenario("linear3");
    const auto learned = learn_all(sc, 60, 3);
    const Vector step{0.5, 0.5};
    const auto part = build_partition(sc.domain, {{Box({-0.5, -0.5}, {0.5, 0.5}), "des"}}, step);
    const auto eta = choose_eta(sc.truth.noise, 2, 1.0);
    AbstractionReport rep;
    const Imdp par = build_imdp(part, sc.known, learned, eta, {}, &rep);
    const Imdp ser = build_imdp_serial(part, sc.known, learned, eta, {});
    CHECK(same_rows(par, ser));
    CHECK(rep.rows == 65 * 3);

    for (CellIndex q = 0; q < part.num_states(); ++q) {
        for (int u = 1; u <= 3; ++u) {
            const auto& row = par.row(q, u);
            CHECK(row.sum_lo() <= 1.0 + 1e-12);
            CHECK(row.sum_hi(part.num_cells()) >= 1.0 - 1e-12);
            CHECK(row.entries.back().target == part.unsafe_index());
            for (const auto& e : row.entries) {
                CHECK(0.0 <= e.lo);
                CHECK(e.lo <= e.hi);
                CHECK(e.hi <= 1.0);
            }
            for (std::size_t k = 1; k < row.entries.size(); ++k) {
                CHECK(row.entries[k - 1].target < row.entries[k].target);
            }
        }
    }
    const auto& u_row = par.row(part.unsafe_index(), 2);
    REQUIRE(u_row.entries.size() == 1);
    CHECK(u_row.entries[0].lo == 1.0);
    CHECK(u_row.background_hi == 0.0);

    std::stringstream text;
    write_imdp(text, par);
    const Imdp back = read_imdp(text);
    CHECK(same_rows(back, par));
    CHECK(back.partition() == part);
    std::ostringstream again;
    write_imdp(again, back);
    CHECK(again.str() == text.str());
}

TEST_CASE("malformed imdp text is rejected") {
    std::istringstream bad("swsynth-imdp 2\n");
    CHECK_THROWS_AS(read_imdp(bad), ConfigError);
    std::istringstream empty("");
    CHECK_THROWS_AS(read_imdp(empty), ConfigError);
}

TEST_CASE("near-identity dynamics keep most mass in place") {
    Scenario sc = make_scenario("linear3");
    sc.known = {KnownMap::identity(2)};
    sc.truth.modes = 1;
    sc.truth.drift = [](std::span<const double> x, int) { return Vector(x.begin(), x.end()); };
    const auto learned = learn_all(sc, 80, 11);
    const auto part = build_partition(sc.domain, {}, Vector{1.0, 1.0});
    const auto eta = choose_eta(sc.truth.noise, 2, 1.0);
    const Imdp imdp = build_imdp(part, sc.known, learned, eta, {});
    for (CellIndex q = 0; q < part.num_cells(); ++q) {
        const auto& row = imdp.row(q, 1);
        const auto own = row.interval(q);
        for (const auto& e : row.entries) {
            if (e.target == q || e.target == part.unsafe_index()) continue;
            CHECK(own.lo >= e.lo);
            CHECK(own.hi >= e.hi);
        }
    }
}

TEST_CASE("empirical transition frequencies fall inside the intervals") {
    const auto sc = make_scenario("linear3");
    const auto learned = learn_all(sc, 100, 5);
    const auto part = build_partition(sc.domain, {}, Vector{0.5, 0.5});
    const auto eta = choose_eta(sc.truth.noise, 2, 1.0);
    const Imdp imdp = build_imdp(part, sc.known, learned, eta, {});

    Rng rng = make_rng(17);
    std::uniform_real_distribution<double> u01(0, 1);
    int good = 0, total = 0;
    for (CellIndex q = 0; q < part.num_cells(); q += 3) {
        for (int u = 1; u <= 3; ++u) {
            const auto& row = imdp.row(q, u);
            const Box c = part.cell(q);
            std::vector<int> hits(part.num_states(), 0);
            for (int k = 0; k < 100; ++k) {
                const Vector x{c.lower(0) + u01(rng) * c.width(0), c.lower(1) + u01(rng) * c.width(1)};
                ++hits[part.locate(sc.truth.step(x, u, rng))];
            }
            for (const auto& e : row.entries) {
                const double p = hits[e.target] / 100.0, w = wilson_half_width(p, 100);
                good += p >= e.lo - w && p <= e.hi + w;
                ++total;
            }
        }
    }
    CHECK(total > 0);
    CHECK(good >= 0.95 * total);
}
