#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adept/labels.hpp"
#include "adept/trajectory.hpp"

namespace adept {

struct EvalPair {
  std::string id;
  LabelSet gt;
  EmotionSet predicted_primary;
  EmotionSet predicted_all;  // always includes predicted_primary
};

EvalPair make_pair(const std::string& id, const LabelSet& gt, EmotionSet primary, EmotionSet minor);
EvalPair make_pair(const Trajectory& t, const LabelSet& gt);

struct ClassScore {
  Emotion emotion = Emotion::Neutral;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  bool in_gt = false;
  std::optional<double> f1;  // only for classes present in GT
};

// Per class c: TP when c is in both primary sets, FN when only in GT, FP when
// only predicted. A tie GT therefore credits each matched class and charges
// one FN per unmatched tied class.
std::array<ClassScore, kNumEmotions> per_class_scores(const std::vector<EvalPair>& pairs);

// The functions below throw PreconditionFailed on an empty pair list.
// Macro average over classes present in GT primaries; `notes` lists the rest.
double primary_macro_f1(const std::vector<EvalPair>& pairs, std::vector<std::string>* notes = nullptr);
double strict_accuracy(const std::vector<EvalPair>& pairs);
double soft_recall(const std::vector<EvalPair>& pairs);
double set_recall(const std::vector<EvalPair>& pairs);
double jaccard(const std::vector<EvalPair>& pairs);
double avg_cardinality(const std::vector<EvalPair>& pairs);

struct ConsensusBucket {
  std::size_t trajectories = 0;
  std::vector<std::size_t> calls;  // N_t per trajectory, input order
  std::optional<double> mean_calls;  // absent for empty buckets
  std::map<std::string, std::size_t> tool_histogram;
};

struct ToolUsageReport {
  std::array<ConsensusBucket, 3> buckets;  // indexed by ConsensusLevel
  std::size_t unmatched = 0;  // trajectories without a GT record
};

std::size_t tool_call_count(const Trajectory& t);
ToolUsageReport tool_usage_report(const std::vector<Trajectory>& trajectories,
                                  const std::map<std::string, LabelSet>& gt);

struct EvalReport {
  std::size_t pairs = 0;
  std::size_t excluded = 0;
  double macro_f1 = 0.0;
  double strict_accuracy = 0.0;
  double soft_recall = 0.0;
  double set_recall = 0.0;
  double jaccard = 0.0;
  double avg_cardinality = 0.0;
  std::array<ClassScore, kNumEmotions> per_class{};
  ToolUsageReport tool_usage;
  std::vector<std::string> notes;
};

// Every trajectory is one pair; backend_unavailable ones are excluded and
// trajectories whose utterance has no GT are counted as unmatched.
EvalReport evaluate(const std::vector<Trajectory>& trajectories, const std::map<std::string, LabelSet>& gt);

nlohmann::json to_json(const ToolUsageReport& r);
nlohmann::json to_json(const EvalReport& r);

}  // namespace adept
