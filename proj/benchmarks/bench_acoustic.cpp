#include <benchmark/benchmark.h>

#include "adept/acoustic.hpp"
#include "adept/fixture.hpp"

using namespace adept;

static void BM_ExtractFrames(benchmark::State& state) {
  const auto audio = synth_sawtooth(180.0, 0.4, static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(extract_frames(audio));
  state.SetLabel(std::to_string(state.range(0)) + " s");
}
BENCHMARK(BM_ExtractFrames)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_PrepareAcoustics(benchmark::State& state) {
  const auto audio = synth_burst(180.0, 0.05, 0.6, 3.0, 1.2, 1.5);
  for (auto _ : state) benchmark::DoNotOptimize(prepare_acoustics(audio));
}
BENCHMARK(BM_PrepareAcoustics)->Unit(benchmark::kMillisecond);

static void BM_AnalyzeSegment(benchmark::State& state) {
  const auto utt = prepare_acoustics(synth_burst(180.0, 0.05, 0.6, 3.0, 1.2, 1.5));
  for (auto _ : state) benchmark::DoNotOptimize(analyze_segment(utt, {1.0, 1.8}, {}));
}
BENCHMARK(BM_AnalyzeSegment);

static void BM_Hotspots(benchmark::State& state) {
  const auto utt = prepare_acoustics(synth_burst(180.0, 0.05, 0.6, 3.0, 1.2, 1.5));
  for (auto _ : state) benchmark::DoNotOptimize(find_hotspots(utt, FocusType::EnergyBurst));
}
BENCHMARK(BM_Hotspots);
