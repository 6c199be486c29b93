#include <gtest/gtest.h>

#include <cmath>

#include "adept/error.hpp"
#include "adept/prior.hpp"
#include "test_support.hpp"

using namespace adept;

namespace {

LabelSet ls(EmotionSet primary, EmotionSet minor = {}) { return LabelSet(primary, minor); }

constexpr auto A = Emotion::Anger;
constexpr auto S = Emotion::Sadness;
constexpr auto H = Emotion::Happiness;
constexpr auto N = Emotion::Neutral;
constexpr auto F = Emotion::Fear;

}  // namespace

TEST(Accumulate, PrimaryMinorCounts) {
  const auto c = accumulate(std::vector<LabelSet>{ls({A}, {S, N})});
  EXPECT_EQ(c.primary_minor(index_of(A), index_of(S)), 1.0);
  EXPECT_EQ(c.primary_minor(index_of(A), index_of(N)), 1.0);
  EXPECT_EQ(c.primary_minor(index_of(S), index_of(A)), 0.0);
  for (std::size_t r = 0; r < kNumEmotions; ++r) EXPECT_EQ(c.tie.row_sum(r), 0.0);
}

TEST(Accumulate, TieIsSymmetric) {
  const auto c = accumulate(std::vector<LabelSet>{ls({H, N})});
  EXPECT_EQ(c.tie(index_of(H), index_of(N)), 1.0);
  EXPECT_EQ(c.tie(index_of(N), index_of(H)), 1.0);
  EXPECT_EQ(c.tie(index_of(H), index_of(H)), 0.0);
}

TEST(Accumulate, ThreeWayTieCountsEveryPair) {
  const auto c = accumulate(std::vector<LabelSet>{ls({A, S, F})});
  EXPECT_EQ(c.tie(index_of(A), index_of(S)), 1.0);
  EXPECT_EQ(c.tie(index_of(A), index_of(F)), 1.0);
  EXPECT_EQ(c.tie(index_of(S), index_of(F)), 1.0);
  EXPECT_TRUE(c.tie.is_symmetric());
}

TEST(Normalize, ToyMatrix) {
  const SquareMatrix c = {{0, 2}, {2, 0}};
  const auto n = normalize(c, 1e-300);
  EXPECT_NEAR(n(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(n(1, 0), 1.0, 1e-12);
  EXPECT_EQ(n(0, 0), 0.0);
}

TEST(Normalize, ZeroAndSymmetry) {
  const auto z = normalize(SquareMatrix(4));
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) EXPECT_EQ(z(a, b), 0.0);
  const SquareMatrix s = {{1, 3, 0}, {3, 0, 5}, {0, 5, 2}};
  EXPECT_TRUE(normalize(s).is_symmetric());
}

TEST(Normalize, PermutationEquivariant) {
  const SquareMatrix c = {{0, 4, 1}, {2, 0, 7}, {3, 5, 1}};
  const std::size_t perm[3] = {2, 0, 1};
  SquareMatrix p(3);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b) p(a, b) = c(perm[a], perm[b]);
  const auto nc = normalize(c);
  const auto np = normalize(p);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b) EXPECT_DOUBLE_EQ(np(a, b), nc(perm[a], perm[b]));
}

TEST(Fuse, EndpointsAndMidpoint) {
  const SquareMatrix pm = {{0.4, 0.1}, {0.0, 0.9}};
  const SquareMatrix tie = {{0.2, 0.3}, {0.5, 0.0}};
  EXPECT_EQ(fuse(pm, tie, 1.0), pm);
  EXPECT_EQ(fuse(pm, tie, 0.0), tie);
  EXPECT_NEAR(fuse(pm, tie, 0.5)(0, 0), 0.3, 1e-15);
  const auto x = fuse(pm, tie, 0.3);
  const auto y = fuse(tie, pm, 0.7);
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b) EXPECT_NEAR(x(a, b), y(a, b), 1e-15);
  EXPECT_THROW(fuse(pm, tie, 1.5), Error);
}

namespace {

PriorTable sample_table() {
  return build_prior(accumulate(std::vector<LabelSet>{
      ls({A}, {S, N}), ls({A}, {Emotion::Contempt}), ls({A, S}), ls({H, N}), ls({H}, {Emotion::Surprise}),
      ls({S}, {F}), ls({N}, {S}), ls({A}, {Emotion::Disgust}), ls({F, S}), ls({H, Emotion::Surprise})}));
}

}  // namespace

TEST(Query, EmptyCandidatesAndBadAnchor) {
  const auto t = sample_table();
  EXPECT_THROW(query(t, {}), Error);
  PriorQuery q;
  q.candidates = {A, S};
  q.anchor = N;
  try {
    query(t, q);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AnchorNotInCandidates);
  }
}

TEST(Query, AnchorPairsComeFirst) {
  const auto t = sample_table();
  PriorQuery q;
  q.candidates = {A, S, N};
  q.anchor = A;
  q.top_k = 2;
  const auto ans = query(t, q);
  ASSERT_EQ(ans.priority_pairs.size(), 2u);
  for (const auto& [a, b] : ans.priority_pairs) EXPECT_TRUE(a == A || b == A);
  EXPECT_TRUE(ans.suggested_candidates.empty());
}

TEST(Query, AnchorFillsRemainingSlotsGlobally) {
  const auto t = sample_table();
  PriorQuery q;
  q.candidates = {A, S, N};
  q.anchor = N;
  q.top_k = 3;
  const auto ans = query(t, q);
  ASSERT_EQ(ans.priority_pairs.size(), 3u);
  EXPECT_EQ(ans.priority_pairs[2], (EmotionPair{A, S}));
}

TEST(Query, ExpandPicksArgmaxOutsidePool) {
  const auto t = sample_table();
  PriorQuery q;
  q.candidates = {H};
  q.intent = PriorIntent::Expand;
  q.top_l = 2;
  const auto ans = query(t, q);
  ASSERT_EQ(ans.suggested_candidates.size(), 2u);
  // Oracle: sort every outside class by S_co(H, c), ties by index.
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t c = 0; c < kNumEmotions; ++c) {
    if (c == index_of(H)) continue;
    scored.push_back({-t.fused(index_of(H), c), c});
  }
  std::sort(scored.begin(), scored.end());
  EXPECT_EQ(ans.suggested_candidates[0], emotion_at(scored[0].second));
  EXPECT_EQ(ans.suggested_candidates[1], emotion_at(scored[1].second));
  EXPECT_TRUE(ans.priority_pairs.empty());
}

TEST(Query, AnswersCarryNoScores) {
  PriorQuery q;
  q.candidates = EmotionSet::all();
  q.tie_mode = true;
  const auto j = to_json(query(sample_table(), q));
  for (const auto& [k, v] : j.items()) {
    for (const auto& item : v) {
      if (item.is_array()) {
        for (const auto& e : item) EXPECT_TRUE(e.is_string()) << k;
      } else {
        EXPECT_TRUE(item.is_string()) << k;
      }
    }
  }
}

TEST(PriorTable, RoundTripsThroughJson) {
  const auto t = sample_table();
  adept::testing::TempDir dir;
  save_prior(t, dir / "prior.json");
  const auto back = load_prior(dir / "prior.json");
  EXPECT_EQ(back.fused, t.fused);
  EXPECT_EQ(back.counts.tie, t.counts.tie);
  EXPECT_EQ(back.lambda, t.lambda);
}
