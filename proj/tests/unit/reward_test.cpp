#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "adept/error.hpp"
#include "adept/reward.hpp"
#include "test_support.hpp"

using namespace adept;
using nlohmann::json;
using adept::testing::add_call;
using adept::testing::clean_trajectory;

namespace {

constexpr auto A = Emotion::Anger;
constexpr auto S = Emotion::Sadness;
constexpr auto H = Emotion::Happiness;
constexpr auto Su = Emotion::Surprise;
constexpr auto N = Emotion::Neutral;

void add_gate(Trajectory& t, Emotion e) { add_call(t, "run_semantic_gate", {{"emotion", std::string(to_string(e))}}); }

void add_acoustic(Trajectory& t) { add_call(t, "find_acoustic_hotspots", {{"focus_type", "energy_burst"}}); }

}  // namespace

TEST(Weights, PresetsAndRatios) {
  const auto b = RewardWeights::preset("B");
  EXPECT_EQ(b.fmt, 0.5);
  EXPECT_EQ(b.phase, 0.2);
  EXPECT_EQ(b.out, 0.4);
  EXPECT_EQ(b.evid, 0.2);
  EXPECT_EQ(b.tool, 0.3);
  EXPECT_NEAR(RewardWeights::preset("A").outcome_process_ratio(), 4.0, 1e-12);
  EXPECT_NEAR(b.outcome_process_ratio(), 0.8, 1e-12);
  EXPECT_NEAR(RewardWeights::preset("C").outcome_process_ratio(), 0.25, 1e-12);
  EXPECT_THROW(RewardWeights::preset("D"), Error);
}

TEST(Weights, JsonOverride) {
  const auto w = RewardWeights::from_json({{"base", "C"}, {"w_fmt", 0.7}});
  EXPECT_EQ(w.fmt, 0.7);
  EXPECT_EQ(w.out, 0.1);
  EXPECT_THROW(RewardWeights::from_json({{"out", -1.0}}), Error);
  EXPECT_THROW(RewardWeights::from_json({{"out", "x"}}), Error);
}

TEST(FormatGate, CleanAndBroken) {
  auto t = clean_trajectory({A, S}, {A}, {});
  EXPECT_EQ(r_fmt(t), 1);
  t.violations.push_back({"invalid_label", Phase::Three, "'Joy'"});
  EXPECT_EQ(r_fmt(t), 0);
  auto empty = clean_trajectory({}, {A}, {});
  EXPECT_EQ(r_fmt(empty), 0);
  auto no3 = clean_trajectory({A}, {A}, {});
  no3.phase3.reset();
  EXPECT_EQ(r_fmt(no3), 0);
}

TEST(PhaseTerm, Examples) {
  auto t = clean_trajectory({A}, {A}, {});
  EXPECT_EQ(r_phase(t), 3.0);
  t.violations.push_back({"phase3_tool_call", Phase::Three, ""});
  EXPECT_EQ(r_phase(t), 0.0);
  t.violations.push_back({"phase3_tool_call", Phase::Three, ""});
  EXPECT_EQ(r_phase(t), 0.0);
  t.violations.push_back({"phase1_forbidden_field", Phase::One, ""});
  t.violations.push_back({"phase2_missing_mandatory_tool", Phase::Two, ""});
  EXPECT_EQ(r_phase(t), -6.0);
  auto d = clean_trajectory({A}, {A}, {});
  d.violations.push_back({"dangling_citation", Phase::Three, ""});
  EXPECT_EQ(r_phase(d), 3.0);
}

TEST(Outcome, Examples) {
  const LabelSet single({A}, {S});
  EXPECT_NEAR(r_out({A}, {S}, single, {A, S, N}), 1.8, 1e-12);
  // Wrong primary, pool misses the GT, minors disjoint.
  EXPECT_NEAR(r_out({N}, {}, single, {N, S}), 0.0, 1e-12);
  EXPECT_NEAR(r_out({N}, {S}, single, {N}), 0.3, 1e-12);
  const LabelSet tie({H, N}, {});
  EXPECT_NEAR(r_out({H, N}, {}, tie, {H, N}), 2.0, 1e-12);
  EXPECT_NEAR(r_out({H}, {}, tie, {H, N}), 1.8, 1e-12);
  // Jaccard of two empty minor sets is 1.
  EXPECT_NEAR(r_out({A}, {}, LabelSet({A}, {}), {}), 1.3, 1e-12);
  const LabelSet tie3({H, N, S}, {});
  EXPECT_NEAR(r_out({H}, {}, tie3, {N, S, A, H}), 1.3, 1e-12);
}

TEST(Evidence, FullCoverage) {
  auto t = clean_trajectory({A, S, N}, {A}, {S, N});
  add_call(t, "StructuralPriorTool", {{"candidates", {"Anger", "Sadness", "Neutral"}}},
           {{"priority_pairs", json::array({json::array({"Anger", "Sadness"})})}});
  add_gate(t, N);
  add_acoustic(t);
  const auto e = evidence_terms(t);
  EXPECT_NEAR(e.coverage, 1.0, 1e-12);
  EXPECT_EQ(e.core_first, 0.5);
  EXPECT_EQ(e.minor_support, 0.5);
  EXPECT_EQ(e.minor_penalty, 0.0);
  EXPECT_NEAR(e.total(), 2.0, 1e-12);
}

TEST(Evidence, UnprobedMinorsHitCap) {
  auto t = clean_trajectory({A, S}, {A}, {S, N, H});
  add_gate(t, A);
  const auto e = evidence_terms(t);
  EXPECT_NEAR(e.coverage, 0.5, 1e-12);
  EXPECT_EQ(e.core_first, 0.0);
  EXPECT_EQ(e.minor_penalty, 2.0);
  EXPECT_EQ(e.minor_support, 0.0);
}

TEST(Evidence, EmptyPoolAndFailedCalls) {
  auto t = clean_trajectory({}, {A}, {});
  add_gate(t, A);
  EXPECT_EQ(evidence_terms(t).coverage, 0.0);
  auto f = clean_trajectory({A}, {A}, {});
  add_call(f, "run_semantic_gate", {{"emotion", "Anger"}}, {{"error", "precondition_failed"}}, "error");
  EXPECT_EQ(evidence_terms(f).coverage, 0.0);
}

TEST(Evidence, CoreFirstUsesFirstThreeCalls) {
  auto t = clean_trajectory({A, S}, {A}, {});
  add_acoustic(t);
  add_acoustic(t);
  add_gate(t, A);
  add_gate(t, S);
  EXPECT_EQ(evidence_terms(t).core_first, 0.0);
  auto u = clean_trajectory({A, S}, {A}, {});
  add_call(u, "compare_emotions", {{"e1", "Anger"}, {"e2", "Sadness"}});
  EXPECT_EQ(evidence_terms(u).core_first, 0.5);
}

TEST(Tool, OverlapPairs) {
  auto t = clean_trajectory({H, Su, N}, {H}, {});
  add_call(t, "compare_emotions", {{"e1", "Surprise"}, {"e2", "Happiness"}});
  for (int i = 0; i < 4; ++i) add_acoustic(t);
  auto tt = tool_terms(t);
  EXPECT_EQ(tt.calls, 5u);
  EXPECT_NEAR(tt.total(), 1.3, 1e-12);

  auto m = clean_trajectory({H, Su, N}, {H}, {});
  for (int i = 0; i < 5; ++i) add_acoustic(m);
  EXPECT_NEAR(tool_terms(m).total(), -1.0 + 0.3, 1e-12);
}

TEST(Tool, BudgetBand) {
  EXPECT_NEAR(budget_term(0), -0.3, 1e-12);
  EXPECT_NEAR(budget_term(1), -0.15, 1e-12);
  EXPECT_NEAR(budget_term(2), 0.3, 1e-12);
  EXPECT_NEAR(budget_term(8), 0.3, 1e-12);
  EXPECT_NEAR(budget_term(10), -0.3, 1e-12);
  EXPECT_NEAR(budget_term(12), -0.6, 1e-12);
  EXPECT_NEAR(budget_term(30), -0.6, 1e-12);
}

TEST(Gate, Examples) {
  EXPECT_EQ(trust_gate({1.0, 1.0}, {true, false}).gate, 1.0);
  const auto g = trust_gate({0.5, 1.0}, {true, false});
  EXPECT_NEAR(g.gate, std::exp(-0.5), 1e-15);
  EXPECT_NEAR(g.gate, 0.6065, 1e-4);
  const auto all = trust_gate({0.1, 5.0}, {true, true});
  EXPECT_EQ(all.gate, 1.0);
  EXPECT_FALSE(all.mu_minus.has_value());
  EXPECT_EQ(trust_gate({}, {}).gate, 1.0);
}

TEST(Composite, Examples) {
  const auto b = RewardWeights::preset("B");
  EXPECT_NEAR(composite(1, 3.0, 1.0, 1.0, 1.3, b, 1.0), 2.09, 1e-12);
  EXPECT_EQ(composite(0, 3.0, 2.0, 2.0, 2.3, b, 1.0), 0.0);
  EXPECT_NEAR(composite(1, 3.0, 1.0, 1.0, 1.3, RewardWeights::preset("A"), 1.0), 1.618, 1e-12);
  EXPECT_NEAR(composite(1, 3.0, 1.0, 1.0, 1.3, b, 0.5), 0.5 + 0.6 + 0.4 + 0.5 * 0.59, 1e-12);
}

TEST(Advantage, Examples) {
  for (double a : group_advantages({1, 1, 1})) EXPECT_EQ(a, 0.0);
  const auto two = group_advantages({0, 2});
  EXPECT_NEAR(two[0], -1.0, 1e-5);
  EXPECT_NEAR(two[1], 1.0, 1e-5);
  const auto x = group_advantages({0.3, 1.7, 0.9, 2.2});
  const auto y = group_advantages({2.2, 0.3, 1.7, 0.9});
  EXPECT_DOUBLE_EQ(x[0], y[1]);
  EXPECT_DOUBLE_EQ(x[3], y[0]);
  EXPECT_LT(std::abs(std::accumulate(x.begin(), x.end(), 0.0)), 1e-9 * 4);
  try {
    group_advantages({1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GroupTooSmall);
  }
}

TEST(Group, ExcludesBackendFailuresAndIsPure) {
  const LabelSet gt({A}, {});
  std::vector<Trajectory> group;
  for (int i = 0; i < 3; ++i) {
    auto t = clean_trajectory({A, S}, i == 2 ? EmotionSet{S} : EmotionSet{A}, {});
    t.rollout = static_cast<std::size_t>(i);
    add_call(t, "StructuralPriorTool", {{"candidates", {"Anger", "Sadness"}}}, {{"priority_pairs", json::array({json::array({"Anger", "Sadness"})})}});
    if (i == 2) {
      add_gate(t, A);
      add_gate(t, S);
    }
    group.push_back(t);
  }
  auto down = clean_trajectory({A}, {}, {});
  down.status = "backend_unavailable";
  group.push_back(down);
  const auto w = RewardWeights::preset("B");
  const auto g = score_group(group, gt, w);
  EXPECT_EQ(g.excluded, 1u);
  ASSERT_EQ(g.rollouts.size(), 3u);
  EXPECT_LT(g.gate.gate, 1.0);
  EXPECT_LT(g.rollouts[2].composite, g.rollouts[2].ungated);
  for (const auto& r : g.rollouts) EXPECT_TRUE(r.advantage.has_value());
  EXPECT_EQ(to_json(score_group(group, gt, w)).dump(), to_json(g).dump());
}
