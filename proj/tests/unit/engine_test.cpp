#include <gtest/gtest.h>

#include "adept/engine.hpp"
#include "adept/fixture.hpp"

using namespace adept;
using nlohmann::json;

namespace {

struct EngineEnv {
  UtteranceRecord record;
  UtteranceInput input;
  PriorTable prior;
  EngineConfig cfg;

  explicit EngineEnv(std::string transcript = "you always lie, this is so unfair") {
    record.id = "e1";
    record.audio = "e1.wav";
    record.transcript = std::move(transcript);
    const auto words = normalized_tokens(record.transcript);
    for (std::size_t i = 0; i < words.size(); ++i) {
      record.alignment.push_back({words[i], 0.1 + 0.25 * static_cast<double>(i), 0.3 + 0.25 * static_cast<double>(i)});
    }
    input.record = &record;
    input.acoustics = std::make_shared<const UtteranceAcoustics>(
        prepare_acoustics(synth_burst(170.0, 0.05, 0.5, 2.2, 1.6, 1.9)));
    prior = build_prior(accumulate(std::vector<LabelSet>{LabelSet({Emotion::Anger}, {Emotion::Sadness}),
                                                         LabelSet({Emotion::Anger, Emotion::Sadness}, {})}));
    cfg.prior = &prior;
  }

  Trajectory run(const json& script, std::uint64_t seed = 1) {
    ScriptedPolicy policy(std::make_shared<const json>(script));
    return run_trajectory(input, policy, cfg, seed);
  }
};

json phase1_emit() { return {{"emit", {{"candidate_pool", {"Anger", "Sadness", "Neutral"}}}}}; }

json decision() {
  return {{"emit", {{"final_decision", {{"primary_emotions", {"Anger"}}, {"minor_emotions", {"Sadness"}}}}}}};
}

json final_output(json evidence = {"${obs:run_semantic_gate}"}) {
  return {{"emit", {{"final_output", {{"primary_emotions", {"Anger"}}, {"minor_emotions", {"Sadness"}},
                                      {"reasoning", "blame words with a loud rise"}, {"evidence", evidence}}}}}};
}

json legal_script() {
  return {{"phase1", {phase1_emit()}},
          {"phase2",
           {{{"call", "StructuralPriorTool"}, {"args", {{"candidates", {"Anger", "Sadness", "Neutral"}}, {"intent", "verify"}}}},
            {{"call", "run_semantic_gate"}, {"args", {{"emotion", "Anger"}}}},
            {{"call", "compare_emotions"}, {"args", {{"e1", "Anger"}, {"e2", "Sadness"}}}},
            {{"call", "analyze_acoustic_segment"}, {"args", {{"word_indices", {6}}}}},
            decision()}},
          {"phase3", {final_output()}}};
}

}  // namespace

TEST(Engine, LegalScriptedRun) {
  EngineEnv env;
  const auto t = env.run(legal_script());
  EXPECT_TRUE(t.violations.empty()) << to_json(t)["violations"].dump();
  EXPECT_EQ(t.predicted_primary, EmotionSet{Emotion::Anger});
  EXPECT_EQ(t.predicted_minor, EmotionSet{Emotion::Sadness});
  ASSERT_EQ(t.observations.size(), 4u);
  for (const auto& o : t.observations) EXPECT_EQ(o.status, "ok") << o.tool << " " << o.payload.dump();
  ASSERT_TRUE(t.phase3);
  EXPECT_EQ(t.phase3->evidence, std::vector<std::string>{"obs-2"});
  EXPECT_EQ(t.phase2_call_count(), 4u);
}

TEST(Engine, DeterministicLedger) {
  EngineEnv env;
  const auto a = to_json(env.run(legal_script(), 9)).dump();
  const auto b = to_json(env.run(legal_script(), 9)).dump();
  EXPECT_EQ(a, b);
}

TEST(Engine, ToolCallInPhase3IsSuppressed) {
  EngineEnv env;
  auto script = legal_script();
  script["phase3"] = {{{"call", "run_semantic_gate"}, {"args", {{"emotion", "Anger"}}}}, final_output()};
  const auto t = env.run(script);
  EXPECT_TRUE(t.has_violation(violation::kPhase3ToolCall));
  EXPECT_EQ(t.observations.size(), 4u);
  EXPECT_EQ(t.predicted_primary, EmotionSet{Emotion::Anger});
}

TEST(Engine, ToolCallInPhase1IsSuppressed) {
  EngineEnv env;
  auto script = legal_script();
  script["phase1"] = {{{"call", "find_acoustic_hotspots"}, {"args", {{"focus_type", "energy_burst"}}}}, phase1_emit()};
  const auto t = env.run(script);
  EXPECT_TRUE(t.has_violation(violation::kPhase1ToolCall));
  EXPECT_EQ(t.observations.size(), 4u);
}

TEST(Engine, MissingPriorCall) {
  EngineEnv env;
  auto script = legal_script();
  script["phase2"].erase(0);
  const auto t = env.run(script);
  EXPECT_TRUE(t.has_violation(violation::kMissingMandatoryTool));
}

TEST(Engine, EmptyScriptIsMalformed) {
  EngineEnv env;
  const auto t = env.run(json::object());
  EXPECT_TRUE(t.has_violation(violation::kMalformedPolicyMessage));
  EXPECT_TRUE(t.predicted_primary.empty());
}

TEST(Engine, BranchOnConflictReplays) {
  EngineEnv env("great, just great");
  auto script = legal_script();
  script["phase1"] = {{{"emit", {{"candidate_pool", {"Happiness", "Anger"}}}}}};
  script["phase2"] = {
      {{"call", "StructuralPriorTool"}, {"args", {{"candidates", {"Happiness", "Anger"}}, {"intent", "verify"}}}},
      {{"call", "analyze_acoustic_segment"}, {"args", {{"start", 1.5}, {"end", 2.0}}}},
      {{"call", "check_semantic_alignment"}, {"args", json::object()}},
      {{"branch",
        {{"when", {{"tool", "check_semantic_alignment"}, {"field", "/verdict"}, {"equals", "Conflict"}}},
         {"then", {{{"call", "replay_audio"}, {"args", {{"reason", "conflict"}, {"focus_points", {{1.5, 2.0}}}}}}}},
         {"else", json::array()}}}},
      decision()};
  const auto t = env.run(script);
  ASSERT_GE(t.observations.size(), 3u);
  EXPECT_EQ(t.observations[2].payload["verdict"], "Conflict") << t.observations[2].payload.dump();
  ASSERT_EQ(t.observations.size(), 4u);
  EXPECT_EQ(t.observations[3].tool, "replay_audio");
  EXPECT_EQ(t.observations[3].payload["re_audit"], true);
}

TEST(Engine, BudgetCap) {
  EngineEnv env;
  env.cfg.max_calls = 2;
  auto script = legal_script();
  const auto t = env.run(script);
  EXPECT_EQ(t.observations.size(), 2u);
  EXPECT_TRUE(t.has_violation(violation::kMissingFinalDecision));
  EXPECT_TRUE(std::any_of(t.diagnostics.begin(), t.diagnostics.end(),
                          [](const Violation& v) { return v.code == violation::kBudgetExhausted; }));
}

TEST(Engine, DanglingCitationIsDiagnosed) {
  EngineEnv env;
  auto script = legal_script();
  script["phase3"] = {final_output({"obs-99", "obs-1"})};
  const auto t = env.run(script);
  EXPECT_TRUE(t.violations.empty());
  // obs-1 is the prior query, which phase 3 never sees.
  std::size_t dangling = 0;
  for (const auto& d : t.diagnostics) dangling += d.code == violation::kDanglingCitation;
  EXPECT_EQ(dangling, 2u);
}

TEST(Engine, Phase3ContextHidesPrior) {
  EngineEnv env;
  std::vector<PolicyContext> seen;
  env.cfg.on_context = [&](const PolicyContext& c) { seen.push_back(c); };
  env.run(legal_script());
  ASSERT_FALSE(seen.empty());
  const auto& last = seen.back();
  ASSERT_EQ(last.phase, Phase::Three);
  EXPECT_TRUE(last.tools.empty());
  const auto dump = to_json(last).dump();
  EXPECT_EQ(dump.find("StructuralPriorTool"), std::string::npos);
  EXPECT_EQ(dump.find("priority_pairs"), std::string::npos);
}

TEST(Engine, RequiresPrior) {
  EngineEnv env;
  env.cfg.prior = nullptr;
  EXPECT_THROW(env.run(legal_script()), Error);
}
