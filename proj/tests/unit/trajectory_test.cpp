#include <gtest/gtest.h>

#include <algorithm>

#include "adept/schema.hpp"
#include "adept/trajectory.hpp"
#include "test_support.hpp"

using namespace adept;
using nlohmann::json;

namespace {

std::vector<std::string> codes(const std::vector<Violation>& v) {
  std::vector<std::string> out;
  for (const auto& x : v) out.push_back(x.code);
  return out;
}

bool has(const std::vector<Violation>& v, std::string_view code) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.code == code; });
}

}  // namespace

TEST(Phase1, ForbiddenFieldAnywhere) {
  const auto p = validate_phase_output(Phase::One, R"({"candidate_pool": ["Anger"], "primary_emotions": ["Anger"]})");
  EXPECT_TRUE(has(p.violations, violation::kForbiddenField));
  const auto nested = validate_phase_output(Phase::One, R"({"candidate_pool": ["Anger"], "x": {"conclusion": 1}})");
  ASSERT_EQ(nested.violations.size(), 1u);
  EXPECT_EQ(nested.violations[0].detail, "/x/conclusion");
}

TEST(Phase1, LeakPatterns) {
  const auto a = validate_phase_output(
      Phase::One, R"({"candidate_pool": ["Anger"], "reasoning": "loud start ... I conclude that she is angry"})");
  EXPECT_EQ(codes(a.violations), std::vector<std::string>{std::string(violation::kSemanticLeak)});
  const auto b = validate_phase_output(Phase::One, R"({"candidate_pool": ["Anger"], "reasoning": "Primary = Anger"})");
  EXPECT_TRUE(has(b.violations, violation::kSemanticLeak));
  const auto c = validate_phase_output(Phase::One, R"({"candidate_pool": ["Anger"], "reasoning": "primary cue is pitch"})");
  EXPECT_TRUE(c.violations.empty());
}

TEST(Phase1, PoolRankingAndConfidence) {
  const auto p = validate_phase_output(Phase::One, R"({"candidate_pool": [
      {"emotion": "Neutral", "confidence": "low"},
      {"emotion": "anger", "confidence": "high"},
      {"emotion": "Sadness", "confidence": "mid"},
      {"emotion": "Fear", "confidence": "sure"}]})");
  ASSERT_TRUE(p.phase1);
  EXPECT_TRUE(p.violations.empty());
  EXPECT_TRUE(has(p.diagnostics, violation::kInvalidConfidence));
  // Emitted order is the rank; confidence only separates equal explicit ranks.
  const std::vector<Emotion> expected = {Emotion::Neutral, Emotion::Anger, Emotion::Sadness, Emotion::Fear};
  EXPECT_EQ(p.phase1->ranked_pool(), expected);

  const auto tied = validate_phase_output(Phase::One, R"({"candidate_pool": [
      {"emotion": "Neutral", "confidence": "low", "rank": 1},
      {"emotion": "Sadness", "confidence": "mid", "rank": 1},
      {"emotion": "Anger", "confidence": "high", "rank": 1}]})");
  ASSERT_TRUE(tied.phase1);
  EXPECT_EQ(tied.phase1->ranked_pool(), (std::vector<Emotion>{Emotion::Anger, Emotion::Sadness, Emotion::Neutral}));
}

TEST(Phase1, ExplicitRankWins) {
  const auto p = validate_phase_output(Phase::One, R"({"candidate_pool": [
      {"emotion": "Neutral", "confidence": "high", "rank": 2},
      {"emotion": "Anger", "confidence": "low", "rank": 1}]})");
  ASSERT_TRUE(p.phase1);
  EXPECT_EQ(p.phase1->ranked_pool(), (std::vector<Emotion>{Emotion::Anger, Emotion::Neutral}));
}

TEST(Phase1, EmptyPoolAndInvalidLabel) {
  EXPECT_EQ(codes(validate_phase_output(Phase::One, R"({"candidate_pool": []})").violations),
            std::vector<std::string>{std::string(violation::kEmptyCandidatePool)});
  EXPECT_EQ(codes(validate_phase_output(Phase::One, R"({"candidate_pool": ["Joy"]})").violations),
            std::vector<std::string>{std::string(violation::kInvalidLabel)});
}

TEST(Phase1, FencedJson) {
  const auto p = validate_phase_output(Phase::One, "```json\n{\"candidate_pool\": [\"Fear\"]}\n```");
  EXPECT_TRUE(p.violations.empty());
  ASSERT_TRUE(p.phase1);
  EXPECT_EQ(p.phase1->pool_set(), EmotionSet{Emotion::Fear});
}

TEST(Phase2, FinalDecision) {
  const auto p = validate_phase_output(
      Phase::Two, R"({"final_decision": {"primary_emotions": ["Happiness", "Neutral"], "minor_emotions": ["Neutral", "Sadness"], "resolved_tie": false}})");
  ASSERT_TRUE(p.phase2);
  EXPECT_EQ(p.phase2->primary, (EmotionSet{Emotion::Happiness, Emotion::Neutral}));
  EXPECT_EQ(p.phase2->minor, EmotionSet{Emotion::Sadness});
  EXPECT_TRUE(has(p.diagnostics, violation::kMinorOverlapsPrimary));
  EXPECT_EQ(p.phase2->resolved_tie, std::optional<bool>(false));
  EXPECT_TRUE(has(validate_phase_output(Phase::Two, R"({"decision": {}})").violations, violation::kMissingFinalDecision));
}

TEST(Phase3, ParsesCleanOutput) {
  const auto p = validate_phase_output(
      Phase::Three, R"({"final_output": {"primary_emotions": ["Anger"], "minor_emotions": [], "reasoning": "r", "evidence": ["obs-1"]}})");
  EXPECT_TRUE(p.violations.empty());
  ASSERT_TRUE(p.phase3);
  EXPECT_EQ(p.phase3->primary, EmotionSet{Emotion::Anger});
  EXPECT_EQ(p.phase3->evidence, std::vector<std::string>{"obs-1"});
}

TEST(Phase3, Problems) {
  EXPECT_EQ(codes(validate_phase_output(Phase::Three, "not json").violations),
            std::vector<std::string>{std::string(violation::kMalformedJson)});
  EXPECT_EQ(codes(validate_phase_output(Phase::Three, "[1,2]").violations),
            std::vector<std::string>{std::string(violation::kMalformedJson)});
  EXPECT_EQ(codes(validate_phase_output(Phase::Three, R"({"final_output": {"primary_emotions": ["Joy"]}})").violations),
            std::vector<std::string>{std::string(violation::kInvalidLabel)});
  EXPECT_EQ(codes(validate_phase_output(Phase::Three, R"({"final_output": {"primary_emotions": []}})").violations),
            std::vector<std::string>{std::string(violation::kMissingFinalOutput)});
}

TEST(ViolationKinds, Classification) {
  EXPECT_EQ(violation_kind(violation::kMalformedJson), ViolationKind::Format);
  EXPECT_EQ(violation_kind(violation::kInvalidLabel), ViolationKind::Format);
  EXPECT_EQ(violation_kind(violation::kEmptyCandidatePool), ViolationKind::Format);
  EXPECT_EQ(violation_kind(violation::kForbiddenField), ViolationKind::Phase);
  EXPECT_EQ(violation_kind(violation::kPhase3ToolCall), ViolationKind::Phase);
  EXPECT_EQ(violation_kind(violation::kMissingMandatoryTool), ViolationKind::Phase);
  EXPECT_EQ(violation_kind(violation::kDanglingCitation), ViolationKind::Diagnostic);
}

TEST(TrajectoryJson, RoundTrip) {
  auto t = adept::testing::clean_trajectory({Emotion::Anger, Emotion::Sadness}, {Emotion::Anger}, {Emotion::Sadness});
  adept::testing::add_call(t, "StructuralPriorTool", {{"candidates", {"Anger", "Sadness"}}},
                           {{"priority_pairs", json::array({json::array({"Anger", "Sadness"})})}});
  t.violations.push_back({"phase3_tool_call", Phase::Three, "x"});
  t.raw_outputs[0] = "{}";
  const json j = to_json(t);
  const auto back = trajectory_from_json(j);
  EXPECT_EQ(to_json(back).dump(), j.dump());
  EXPECT_EQ(back.phase2_call_count(), 1u);
  EXPECT_NE(back.find_observation("obs-1"), nullptr);
  EXPECT_EQ(back.find_observation("obs-9"), nullptr);
}

TEST(ObservationHash, ChainsOnPrevious) {
  const auto o = adept::testing::make_obs(1, "compare_emotions", {{"e1", "Anger"}, {"e2", "Fear"}});
  const auto h1 = observation_hash(o, "");
  EXPECT_EQ(h1, observation_hash(o, ""));
  EXPECT_NE(h1, observation_hash(o, "abc"));
  EXPECT_EQ(h1.size(), 64u);
}

TEST(Schema, SubsetKeywords) {
  const json schema = {{"type", "object"},
                       {"required", {"n"}},
                       {"additionalProperties", false},
                       {"properties",
                        {{"n", {{"type", "integer"}, {"minimum", 1}, {"maximum", 5}}},
                         {"tag", {{"type", "string"}, {"enum", {"a", "b"}}}},
                         {"list", {{"type", "array"}, {"items", {{"type", "string"}, {"minLength", 1}}}, {"minItems", 1}}}}}};
  EXPECT_TRUE(validate_schema(schema, {{"n", 3}, {"tag", "a"}, {"list", {"x"}}}).empty());
  EXPECT_FALSE(validate_schema(schema, {{"n", 0}}).empty());
  EXPECT_FALSE(validate_schema(schema, {{"n", 2.5}}).empty());
  EXPECT_FALSE(validate_schema(schema, {{"tag", "a"}}).empty());
  EXPECT_FALSE(validate_schema(schema, {{"n", 1}, {"extra", 1}}).empty());
  EXPECT_FALSE(validate_schema(schema, {{"n", 1}, {"tag", "c"}}).empty());
  const auto errs = validate_schema(schema, {{"n", 1}, {"list", {""}}});
  ASSERT_EQ(errs.size(), 1u);
  EXPECT_EQ(errs[0].rfind("/list/0", 0), 0u) << errs[0];
  const json any = {{"anyOf", {{{"type", "string"}}, {{"type", "number"}}}}};
  EXPECT_TRUE(validate_schema(any, 1).empty());
  EXPECT_FALSE(validate_schema(any, json::array()).empty());
}
