#include <benchmark/benchmark.h>

#include <random>

#include "adept/reward.hpp"
#include "oracles.hpp"

using namespace adept;

static void BM_ScoreGroup(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto k = static_cast<std::size_t>(state.range(0));
  std::vector<Trajectory> group;
  for (std::size_t i = 0; i < k; ++i) group.push_back(oracle::build(oracle::random_traj(rng), "u", i));
  const LabelSet gt({Emotion::Anger}, {Emotion::Sadness});
  const auto w = RewardWeights::preset("B");
  for (auto _ : state) benchmark::DoNotOptimize(score_group(group, gt, w));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(k));
}
BENCHMARK(BM_ScoreGroup)->Arg(4)->Arg(8)->Arg(16);

static void BM_TrustGate(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> d(-2, 2);
  std::vector<double> s(64);
  std::vector<bool> c(64);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = d(rng);
    c[i] = i % 3 == 0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(trust_gate(s, c));
}
BENCHMARK(BM_TrustGate);
