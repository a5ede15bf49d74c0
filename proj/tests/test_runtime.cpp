#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "swsynth/errors.hpp"
#include "swsynth/runtime.hpp"
#include "swsynth/scenario.hpp"

using namespace swsynth;

namespace {

struct Setup {
    Scenario sc = make_scenario("linear3");
    Partition partition = build_partition(
        sc.domain, {{Box({-0.5, -0.5}, {0.5, 0.5}), "des"}, {Box({1.0, -1.0}, {1.5, 0.0}), "obs"}}, Vector{0.5, 0.5});
    ltlf::Formula phi = ltlf::parse("G !obs & F des");
    ltlf::Dfa dfa;
    Pimdp product;
    SynthesisResult result;
};

const Setup& setup() {
    static const Setup s = [] {
        Setup s;
        const auto data = generate_dataset(s.sc, 60, 8);
        std::vector<LearnedMode> learned;
        for (const auto& r : build_residuals(data, s.sc.known)) {
            learned.push_back(learn_mode(r, Kernel{100.0, {2.0}}, 0.01));
        }
        const Imdp imdp = build_imdp(s.partition, s.sc.known, learned, choose_eta(s.sc.truth.noise, 2, 1.0), {});
        s.dfa = ltlf::to_dfa(s.phi, {"des", "obs"});
        s.product = build_product(imdp, s.dfa);
        s.result = synthesize(s.product, 0.95);
        return s;
    }();
    return s;
}

Controller controller() {
    const auto& s = setup();
    return Controller::from_result(s.product, s.result, s.partition, s.dfa);
}

}  // namespace

TEST_CASE("starting in the goal or the obstacle decides at once") {
    const auto& s = setup();
    Controller c = controller();
    CHECK(c.reset(Vector{0.1, 0.2}) == Status::satisfied);
    CHECK_THROWS_AS(c.action(), std::logic_error);
    CHECK(c.reset(Vector{1.2, -0.5}) == Status::violated);
    CHECK(c.reset(Vector{3.0, 0.0}) == Status::violated);
    CHECK(c.reset(Vector{-1.7, 1.7}) == Status::running);
    CHECK(c.action() >= 1);
    CHECK(c.action() <= 3);

    const auto des = simulate(s.sc.truth, controller(), Vector{0.1, 0.2}, 50, 1);
    CHECK(des.verdict == Verdict::satisfied);
    CHECK(des.steps == 0);
    const auto obs = simulate(s.sc.truth, controller(), Vector{1.2, -0.5}, 50, 1);
    CHECK(obs.verdict == Verdict::violated);
}

TEST_CASE("shared faces go to the smaller cell index") {
    Controller c = controller();
    const Vector x{-1.5, -1.0};
    c.reset(x);
    CHECK(c.cell() == setup().partition.locate(x));
    CHECK(c.cell() == 0 + 1 * 8 + 0);
}

TEST_CASE("zero-noise identity system is deterministic") {
    const auto& s = setup();
    Truth still;
    still.dim = 2;
    still.modes = 3;
    still.noise = NoiseModel{NoiseKind::bounded_uniform, 0.0, 0.0, 0.0};
    still.drift = [](std::span<const double> x, int) { return Vector(x.begin(), x.end()); };
    const auto a = simulate(still, controller(), Vector{-1.7, 1.7}, 20, 3);
    CHECK(a.verdict == Verdict::truncated);
    CHECK(a.steps == 20);
    for (const auto& x : a.states) CHECK(x == Vector{-1.7, 1.7});
    const auto b = simulate(still, controller(), Vector{-1.7, 1.7}, 20, 99);
    CHECK(a.actions == b.actions);
    (void)s;
}

TEST_CASE("seeded runs repeat and verdicts agree with the formula") {
    const auto& s = setup();
    Rng rng = make_rng(4);
    std::uniform_real_distribution<double> u(-2, 2);
    int satisfied = 0;
    for (int t = 0; t < 200; ++t) {
        const Vector x0{u(rng), u(rng)};
        const auto a = simulate(s.sc.truth, controller(), x0, 60, 10, t);
        const auto b = simulate(s.sc.truth, controller(), x0, 60, 10, t);
        CHECK(a.states == b.states);
        CHECK(a.verdict == b.verdict);
        CHECK(a.actions.size() + 1 == a.states.size());
        if (a.verdict == Verdict::satisfied) {
            ++satisfied;
            CHECK(ltlf::evaluate(s.phi, a.labels, 0, s.dfa.ap));
        }
        if (a.verdict == Verdict::violated && a.labels.size() == a.states.size()) {
            CHECK_FALSE(ltlf::evaluate(s.phi, a.labels, 0, s.dfa.ap));
        }
        if (a.verdict == Verdict::truncated) CHECK(a.steps == 60);
    }
    CHECK(satisfied > 100);
}

TEST_CASE("monte carlo forced rates and wilson interval") {
    const auto& s = setup();
    const auto des = monte_carlo(s.sc.truth, controller(), Vector{0.1, 0.1}, 50, 30, 2);
    CHECK(des.rate == 1.0);
    const auto obs = monte_carlo(s.sc.truth, controller(), Vector{1.2, -0.5}, 50, 30, 2);
    CHECK(obs.rate == 0.0);

    const Wilson w = wilson(50, 100);
    CHECK(w.center == doctest::Approx(0.5));
    CHECK(w.half_width == doctest::Approx(0.12472).epsilon(1e-4));
    const Wilson all = wilson(100, 100);
    CHECK(all.hi() == doctest::Approx(1.0));
    CHECK(all.lo() < 1.0);

    MonteCarlo mc;
    mc.interval = {0.5, 0.05};
    CHECK(mc.inconsistent_with(0.7, 0.9));
    CHECK_FALSE(mc.inconsistent_with(0.5, 0.9));
    CHECK_FALSE(mc.inconsistent_with(0.6, 0.9, 0.1));
}

TEST_CASE("trace export") {
    const auto& s = setup();
    const auto t = simulate(s.sc.truth, controller(), Vector{-1.7, 1.7}, 5, 1);
    std::ostringstream out;
    write_trace_csv(out, t);
    const std::string csv = out.str();
    CHECK(csv.rfind("step,x1,x2,action,dfa_state\n", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == t.states.size() + 1);
}

TEST_CASE("strategy size is checked") {
    const auto& s = setup();
    CHECK_THROWS_AS(Controller(s.partition, s.dfa, {1, 2}), ConfigError);
}
