#include <benchmark/benchmark.h>

#include "lrtng/benchmarks.hpp"
#include "lrtng/reachtube.hpp"
#include "lrtng/sampling.hpp"

using namespace lrtng;

namespace {

struct Fixture {
  Benchmark bm = *find_benchmark("brusselator");
  std::vector<double> times;
  std::vector<Box> boxes;
  std::vector<Vector> samples;

  Fixture() {
    RunConfig cfg;
    cfg.initial = bm.initial;
    cfg.dt = bm.defaults.dt;
    cfg.horizon = 2.0;
    run(bm.system, cfg, [&](const ReachsetStep& s) {
      times.push_back(s.t);
      boxes.push_back(s.enclosure);
    });
    samples = sampling::sample_ellipsoid(bm.initial.center, bm.initial.radii, 256, 1);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_ContainmentSerial(benchmark::State& state) {
  const Fixture& f = fixture();
  const sampling::TapeRhs rhs(f.bm.system.rhs_tape());
  for (auto _ : state) {
    auto rep = sampling::containment_serial(rhs, f.samples, f.times, f.boxes, 10);
    benchmark::DoNotOptimize(rep);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.samples.size()));
}

void BM_ContainmentParallel(benchmark::State& state) {
  const Fixture& f = fixture();
  const sampling::TapeRhs rhs(f.bm.system.rhs_tape());
  for (auto _ : state) {
    auto rep = sampling::containment_parallel(rhs, f.samples, f.times, f.boxes, 10);
    benchmark::DoNotOptimize(rep);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.samples.size()));
  state.counters["threads"] = static_cast<double>(sampling::max_threads());
}

void BM_ReachtubeStep(benchmark::State& state) {
  const Benchmark bm = *find_benchmark("robotarm");
  RunConfig cfg;
  cfg.initial = bm.initial;
  cfg.dt = bm.defaults.dt;
  cfg.horizon = 1e6;
  cfg.order = static_cast<int>(state.range(0));
  Reachtube tube(bm.system, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(tube.step().delta);
}

}  // namespace

BENCHMARK(BM_ContainmentSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ContainmentParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReachtubeStep)->Arg(1)->Arg(4)->Unit(benchmark::kMicrosecond)->Iterations(500);

BENCHMARK_MAIN();
