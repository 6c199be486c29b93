#include <gtest/gtest.h>

#include <random>

#include "adept/metrics.hpp"
#include "adept/prior.hpp"
#include "adept/refstats.hpp"
#include "adept/reward.hpp"
#include "oracles.hpp"

using namespace adept;
namespace o = adept::oracle;

TEST(RewardOracle, RandomGroupsAllPresets) {
  std::mt19937_64 rng(20240601);
  for (const char* preset : {"A", "B", "C"}) {
    const auto w = RewardWeights::preset(preset);
    const o::Weights ow{w.fmt, w.phase, w.out, w.evid, w.tool};
    for (int g = 0; g < 100; ++g) {
      const auto [gp, gm] = o::random_gt(rng);
      std::vector<o::TrajSpec> specs;
      std::vector<Trajectory> group;
      for (std::size_t k = 0; k < 4; ++k) {
        specs.push_back(o::random_traj(rng));
        group.push_back(o::build(specs.back(), "g" + std::to_string(g), k));
      }
      const auto expect = o::score(specs, gp, gm, ow);
      const auto got = score_group(group, LabelSet(o::set_of(gp), o::set_of(gm)), w);
      ASSERT_EQ(got.rollouts.size(), expect.size());
      for (std::size_t k = 0; k < expect.size(); ++k) {
        const auto& a = got.rollouts[k];
        const auto& e = expect[k];
        EXPECT_EQ(a.fmt, e.fmt);
        EXPECT_NEAR(a.phase, e.phase, 1e-12);
        EXPECT_NEAR(a.out, e.out, 1e-12);
        EXPECT_NEAR(a.evid, e.evid, 1e-12);
        EXPECT_NEAR(a.tool, e.tool, 1e-12);
        EXPECT_NEAR(a.composite, e.composite, 1e-12);
        EXPECT_NEAR(a.ungated, e.ungated, 1e-12);
        ASSERT_TRUE(a.advantage.has_value());
        EXPECT_NEAR(*a.advantage, e.advantage, 1e-9);
      }
    }
  }
}

TEST(MetricOracle, RandomSets) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 100)(rng);
    std::vector<o::PairMasks> masks;
    std::vector<EvalPair> pairs;
    for (int i = 0; i < n; ++i) {
      const auto [gp, gm] = o::random_gt(rng);
      const auto pri = o::random_nonempty(rng, 0.15);
      const auto min = o::random_mask(rng, 0.15);
      masks.push_back({gp, gm, pri, o::either(pri, min)});
      pairs.push_back(make_pair("p", LabelSet(o::set_of(gp), o::set_of(gm)), o::set_of(pri), o::set_of(min)));
    }
    EXPECT_NEAR(primary_macro_f1(pairs), o::macro_f1(masks), 1e-12);
    EXPECT_NEAR(strict_accuracy(pairs), o::strict(masks), 1e-12);
    EXPECT_NEAR(soft_recall(pairs), o::soft(masks), 1e-12);
    EXPECT_NEAR(set_recall(pairs), o::set_r(masks), 1e-12);
    EXPECT_NEAR(jaccard(pairs), o::iou(masks), 1e-12);
    EXPECT_NEAR(avg_cardinality(pairs), o::cardinality(masks), 1e-12);
    EXPECT_GE(soft_recall(pairs), strict_accuracy(pairs));
    EXPECT_LE(jaccard(pairs), set_recall(pairs) + 1e-15);
  }
}

TEST(PriorOracle, AccumulateNormalizeQuery) {
  std::mt19937_64 rng(5);
  std::vector<std::pair<o::Mask, o::Mask>> masks;
  std::vector<LabelSet> labels;
  for (int i = 0; i < 300; ++i) {
    masks.push_back(o::random_gt(rng));
    labels.emplace_back(o::set_of(masks.back().first), o::set_of(masks.back().second));
  }
  const auto [pm, tie] = o::count_cooccurrence(masks);
  const auto table = build_prior(accumulate(labels), 0.5);
  const auto npm = o::normalized(pm, kDefaultPriorEpsilon);
  const auto ntie = o::normalized(tie, kDefaultPriorEpsilon);
  o::Matrix fused(8, std::vector<double>(8));
  for (std::size_t a = 0; a < 8; ++a) {
    for (std::size_t b = 0; b < 8; ++b) {
      EXPECT_EQ(table.counts.primary_minor(a, b), pm[a][b]);
      EXPECT_EQ(table.counts.tie(a, b), tie[a][b]);
      EXPECT_NEAR(table.normalized_pm(a, b), npm[a][b], 1e-12);
      fused[a][b] = 0.5 * npm[a][b] + 0.5 * ntie[a][b];
      EXPECT_NEAR(table.fused(a, b), fused[a][b], 1e-12);
    }
  }
  for (int trial = 0; trial < 200; ++trial) {
    const auto cand = o::random_nonempty(rng, 0.4);
    PriorQuery q;
    q.candidates = o::set_of(cand);
    q.top_k = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 28)(rng));
    int anchor = -1;
    if (trial % 3 == 0) {
      for (int i = 0; i < 8; ++i)
        if (cand[i]) anchor = i;
      q.anchor = emotion_at(static_cast<std::size_t>(anchor));
    }
    const auto got = query(table, q);
    const auto want = o::verify_pairs(fused, cand, anchor, q.top_k);
    ASSERT_EQ(got.priority_pairs.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      EXPECT_EQ(static_cast<int>(index_of(got.priority_pairs[i].first)), want[i].first);
      EXPECT_EQ(static_cast<int>(index_of(got.priority_pairs[i].second)), want[i].second);
    }
    PriorQuery e = q;
    e.anchor.reset();
    e.intent = PriorIntent::Expand;
    e.top_l = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 7)(rng));
    const auto expanded = query(table, e);
    const auto want_e = o::expand(fused, cand, e.top_l);
    ASSERT_EQ(expanded.suggested_candidates.size(), want_e.size());
    for (std::size_t i = 0; i < want_e.size(); ++i)
      EXPECT_EQ(static_cast<int>(index_of(expanded.suggested_candidates[i])), want_e[i]);
  }
}

TEST(LabelOracle, CorpusStatsRecount) {
  std::mt19937_64 rng(11);
  std::vector<std::pair<o::Mask, o::Mask>> masks;
  std::vector<LabelSet> labels;
  for (int i = 0; i < 257; ++i) {
    masks.push_back(o::random_gt(rng));
    labels.emplace_back(o::set_of(masks.back().first), o::set_of(masks.back().second));
  }
  const auto want = o::recount(masks);
  const auto got = corpus_stats(labels);
  EXPECT_EQ(got.n, want.n);
  EXPECT_EQ(got.tie_count, want.ties);
  EXPECT_NEAR(got.mean_labels, want.mean_labels, 1e-12);
  EXPECT_EQ(got.median_labels, want.median_labels);
  EXPECT_EQ(got.consensus_histogram, want.consensus);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(got.primary_counts[i], want.primary[i]);
  EXPECT_EQ(got.minor_count_histogram, want.minor_hist);
}

TEST(RefstatsOracle, TwoPassMedianIqr) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d(0.0, 2.0);
  std::vector<UtteranceSummary> sums;
  for (int i = 0; i < 37; ++i) {
    UtteranceSummary s;
    s.id = "u" + std::to_string(i);
    s.speaker = i % 2 ? "a" : "b";
    for (Metric m : kAllMetrics) s.values[m] = d(rng) + static_cast<double>(static_cast<int>(m));
    sums.push_back(s);
  }
  const auto ref = build_reference(sums, ReferenceScope::Speaker);
  for (Metric m : kAllMetrics) {
    std::vector<double> all, a;
    for (const auto& s : sums) {
      all.push_back(s.values.at(m));
      if (s.speaker == "a") a.push_back(s.values.at(m));
    }
    EXPECT_NEAR(ref.corpus.at(m).median, o::quantile(all, 0.5), 1e-12);
    EXPECT_NEAR(ref.corpus.at(m).iqr, o::quantile(all, 0.75) - o::quantile(all, 0.25), 1e-12);
    EXPECT_NEAR(ref.speakers.at("a").at(m).median, o::quantile(a, 0.5), 1e-12);
  }
}
