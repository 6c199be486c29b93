#include <benchmark/benchmark.h>

#include <random>

#include "adept/prior.hpp"

using namespace adept;

namespace {

std::vector<LabelSet> random_labels(std::size_t n) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> bits(1, 255);
  std::vector<LabelSet> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto pri = EmotionSet::from_bits(static_cast<std::uint8_t>(bits(rng) & bits(rng) & bits(rng)));
    const auto min = EmotionSet::from_bits(static_cast<std::uint8_t>(bits(rng) & bits(rng))) - pri;
    out.emplace_back(pri.empty() ? EmotionSet{Emotion::Neutral} : pri, pri.empty() ? min - EmotionSet{Emotion::Neutral} : min);
  }
  return out;
}

}  // namespace

static void BM_BuildPrior(benchmark::State& state) {
  const auto labels = random_labels(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_prior(accumulate(labels)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildPrior)->Arg(1000)->Arg(10000);

static void BM_Query(benchmark::State& state) {
  const auto table = build_prior(accumulate(random_labels(2000)));
  PriorQuery q;
  q.candidates = EmotionSet::all();
  q.intent = state.range(0) ? PriorIntent::Expand : PriorIntent::Verify;
  if (q.intent == PriorIntent::Expand) q.candidates = {Emotion::Anger, Emotion::Sadness};
  q.tie_mode = true;
  for (auto _ : state) benchmark::DoNotOptimize(query(table, q));
}
BENCHMARK(BM_Query)->Arg(0)->Arg(1);
