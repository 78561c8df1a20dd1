#include "drainguard/scenarios.hpp"
#include "drainguard/sweep.hpp"

#include <benchmark/benchmark.h>

using namespace drainguard;

namespace {

ScenarioSpec short_detection() {
    auto spec = detection_scenario(rtls_deployment());
    spec.horizon_days = 60;
    std::get<ChainedBursts>(*spec.attack).start_day = 20;
    return spec;
}

SeverityGrid grid() {
    SeverityGrid g;
    for (std::uint32_t m = 10; m <= 1000; m += 10) {
        g.burst_requests.push_back(m);
    }
    g.windows = {Millis{60'000}, Millis{600'000}, Millis{3'600'000}};
    g.start_days = {0, 100, 200};
    return g;
}

void BM_SeedsSerial(benchmark::State& state) {
    const auto spec = short_detection();
    const auto seeds = seed_range(1, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_seeds_serial([&](std::uint64_t s) { return run_scenario(spec, s); }, seeds));
    }
}

void BM_SeedsParallel(benchmark::State& state) {
    const auto spec = short_detection();
    const auto seeds = seed_range(1, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_seeds([&](std::uint64_t s) { return run_scenario(spec, s); }, seeds));
    }
    state.counters["threads"] = parallel_threads();
}

void BM_SeveritySerial(benchmark::State& state) {
    const auto cfg = rtls_deployment();
    const auto g = grid();
    for (auto _ : state) {
        benchmark::DoNotOptimize(severity_sweep_serial(cfg, g));
    }
}

void BM_SeverityParallel(benchmark::State& state) {
    const auto cfg = rtls_deployment();
    const auto g = grid();
    for (auto _ : state) {
        benchmark::DoNotOptimize(severity_sweep(cfg, g));
    }
    state.counters["threads"] = parallel_threads();
}

} // namespace

BENCHMARK(BM_SeedsSerial)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SeedsParallel)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SeveritySerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SeverityParallel)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
