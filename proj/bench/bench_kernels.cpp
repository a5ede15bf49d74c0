#include <benchmark/benchmark.h>

#include "swsynth/pipeline.hpp"
#include "swsynth/scenario.hpp"

using namespace swsynth;

namespace {

struct Fixture {
    RunConfig config;
    std::vector<LearnedMode> learned;
    Pimdp product;

    Fixture() {
        config.grid_step = {0.25, 0.25};
        const Scenario sc = make_scenario(config.scenario);
        learned = learn_modes(config, generate_dataset(sc, 100, 1));
        product = build_product(abstract_modes(config, learned).at(0), make_dfa(config));
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

void BM_abstraction(benchmark::State& state) {
    const auto& f = fixture();
    const bool parallel = state.range(0) != 0;
    for (auto _ : state) benchmark::DoNotOptimize(abstract_modes(f.config, f.learned, parallel));
}
BENCHMARK(BM_abstraction)->Arg(0)->Arg(1)->ArgNames({"parallel"})->Unit(benchmark::kMillisecond);

void BM_value_iteration(benchmark::State& state) {
    const auto& f = fixture();
    IviOptions o;
    o.parallel = state.range(0) != 0;
    for (auto _ : state) benchmark::DoNotOptimize(interval_value_iteration(f.product, Objective::maximin, o));
}
BENCHMARK(BM_value_iteration)->Arg(0)->Arg(1)->ArgNames({"parallel"})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
