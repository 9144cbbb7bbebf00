// Serial reference kernels against their OpenMP counterparts on a full
// 200x200x16 frame. The parallel variants take the worker count as argument.

#include <benchmark/benchmark.h>

#include <numbers>
#include <thread>

#include "occkit/flow.hpp"
#include "occkit/metrics.hpp"
#include "occkit/parallel.hpp"
#include "occkit/reference.hpp"
#include "occkit/scenegen.hpp"
#include "occkit/taxonomy.hpp"

using namespace occkit;

namespace {

struct Scene {
  ScenarioScript script;
  FramePair pair;
  std::vector<CameraModel> cameras;
  std::set<ClassId> static_ids;

  Scene() {
    RandomScenarioOptions o;
    o.duration = 2;
    o.agents = 10;
    o.buildings = 8;
    script = random_scenario(1, o);
    const auto a = occkit::render_frame(script, 0), b = occkit::render_frame(script, 1);
    pair = {a.grid, b.grid, a.ego, b.ego, a.annotations, b.annotations};
    for (int k = 0; k < 6; ++k) cameras.push_back(CameraModel::looking_along(k * std::numbers::pi / 3, 1.2, 1600, 900));
    static_ids = builtin_taxonomy("unified").static_ids();
  }
};

const Scene& scene() {
  static const Scene s;
  return s;
}

void workers(benchmark::internal::Benchmark* b) {
  const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  for (int n = 1; n <= std::max(4, hw); n *= 2) b->Arg(n);
}

template <typename F>
void parallel(benchmark::State& state, F&& f) {
  set_worker_count(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(f());
  set_worker_count(0);
}

void BM_FovSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(reference::fov_mask(scene().script.spec, scene().cameras));
}
void BM_FovParallel(benchmark::State& st) {
  parallel(st, [] { return fov_mask(scene().script.spec, scene().cameras); });
}

void BM_StaticFlowSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(reference::static_flow(scene().pair));
}
void BM_StaticFlowParallel(benchmark::State& st) {
  parallel(st, [] { return static_flow(scene().pair); });
}

void BM_DynamicFlowSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(reference::dynamic_flow(scene().pair));
}
void BM_DynamicFlowParallel(benchmark::State& st) {
  parallel(st, [] { return dynamic_flow(scene().pair); });
}

void BM_ClassOverlapSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(reference::class_overlap(scene().pair.grid_t, scene().pair.grid_t1));
}
void BM_ClassOverlapParallel(benchmark::State& st) {
  parallel(st, [] { return class_overlap(scene().pair.grid_t, scene().pair.grid_t1); });
}

void BM_BackgroundSerial(benchmark::State& st) {
  const auto& p = scene().pair;
  for (auto _ : st) {
    benchmark::DoNotOptimize(reference::background_consistency(p.grid_t, p.grid_t1, p.ego_t, p.ego_t1, scene().static_ids));
  }
}
void BM_BackgroundParallel(benchmark::State& st) {
  const auto& p = scene().pair;
  parallel(st, [&] { return background_consistency(p.grid_t, p.grid_t1, p.ego_t, p.ego_t1, scene().static_ids); });
}

void BM_RenderSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(reference::render_frame(scene().script, 1));
}
void BM_RenderParallel(benchmark::State& st) {
  parallel(st, [] { return occkit::render_frame(scene().script, 1); });
}

}  // namespace

BENCHMARK(BM_FovSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FovParallel)->Apply(workers)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StaticFlowSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StaticFlowParallel)->Apply(workers)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DynamicFlowSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DynamicFlowParallel)->Apply(workers)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClassOverlapSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClassOverlapParallel)->Apply(workers)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BackgroundSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BackgroundParallel)->Apply(workers)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderParallel)->Apply(workers)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
