#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "smartconf/controller.hpp"
#include "smartconf/harness.hpp"
#include "smartconf/profiler.hpp"
#include "smartconf/scenario.hpp"

using namespace smartconf;

static void BM_ControlStep(benchmark::State& state) {
    ControllerParams p;
    p.alpha = 1.5;
    p.pole = 0.6;
    p.goal = 495;
    p.virtual_goal = 445.5;
    p.hard = true;
    ControllerState st;
    double m = 300;
    for (auto _ : state) {
        const auto r = control_step(st, p, m);
        m = 0.9 * m + 0.1 * (p.alpha * r.next_value);
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(BM_ControlStep);

static void BM_Synthesize(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> noise(0, 10);
    std::vector<ProfileSample> s;
    for (int r = 0; r < state.range(0); ++r) {
        for (double c : {10.0, 30.0, 50.0, 70.0, 90.0}) s.push_back({c, 340 + 1.2 * c + noise(rng)});
    }
    for (auto _ : state) benchmark::DoNotOptimize(synthesize(s, 495, true));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.size()));
}
BENCHMARK(BM_Synthesize)->Arg(20)->Arg(1000);

static void BM_PlantStep(benchmark::State& state) {
    const auto s = make_scenario("hb3813-two-phase");
    auto plant = s.make_plant(1);
    const double v[] = {100.0};
    for (auto _ : state) benchmark::DoNotOptimize(plant->step(v));
}
BENCHMARK(BM_PlantStep);

static void BM_FullRun(benchmark::State& state) {
    const auto s = make_scenario("hb3813-two-phase");
    const auto controllers = synthesize_scenario(s);
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(run_scenario(s, Mode{}, seed++, controllers).summary);
}
BENCHMARK(BM_FullRun)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
