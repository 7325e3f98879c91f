// Serial reference vs OpenMP kernels on the two-aircraft scene.

#include "decktrack/config.hpp"
#include "decktrack/pipeline.hpp"
#include "decktrack/scene.hpp"

#include <benchmark/benchmark.h>

#include <omp.h>

namespace {

using namespace decktrack;

struct Fixture {
  scene::Scene scene;
  scene::SimulationOutput sim;
  pipeline::PipelineConfig pipeline;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture out;
    out.scene = config::read_scene(std::filesystem::path(DECKTRACK_DATA_DIR) / "scenes" / "two_aircraft.json").scene;
    out.scene.noise.pixel_sigma = 1.0;
    out.scene.noise.dropout_prob = 0.05;
    out.scene.noise.seed = 7;
    out.sim = scene::simulate(out.scene);
    out.pipeline.skeletons = out.scene.skeletons;
    out.pipeline.cameras = out.sim.cameras;
    out.pipeline.bins = out.scene.bins;
    return out;
  }();
  return f;
}

void frames_counter(benchmark::State& state) {
  const auto [first, last] = fixture().scene.frame_span();
  state.counters["frames/s"] =
      benchmark::Counter(static_cast<double>(last - first + 1), benchmark::Counter::kIsIterationInvariantRate);
  state.counters["threads"] = omp_get_max_threads();
}

void BM_SimulateSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(scene::simulate_reference(fixture().scene));
  frames_counter(state);
}

void BM_SimulateParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(scene::simulate(fixture().scene));
  frames_counter(state);
}

void BM_EstimateSerial(benchmark::State& state) {
  auto pc = fixture().pipeline;
  pc.kind = static_cast<pipeline::Kind>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(pipeline::estimate_frames_reference(pc, fixture().sim.detections));
  frames_counter(state);
}

void BM_EstimateParallel(benchmark::State& state) {
  auto pc = fixture().pipeline;
  pc.kind = static_cast<pipeline::Kind>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(pipeline::estimate_frames(pc, fixture().sim.detections));
  frames_counter(state);
}

}  // namespace

BENCHMARK(BM_SimulateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EstimateSerial)
    ->Arg(static_cast<int>(pipeline::Kind::KeypointPnpSvd))
    ->Arg(static_cast<int>(pipeline::Kind::BboxDltYaw))
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EstimateParallel)
    ->Arg(static_cast<int>(pipeline::Kind::KeypointPnpSvd))
    ->Arg(static_cast<int>(pipeline::Kind::BboxDltYaw))
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
