#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "adept/labels.hpp"
#include "adept/trajectory.hpp"

namespace adept {

struct RewardWeights {
  std::string name = "B";
  double fmt = 0.5;
  double phase = 0.2;
  double out = 0.4;
  double evid = 0.2;
  double tool = 0.3;

  // A: outcome-heavy 4:1, B: the default 0.8:1, C: process-heavy 1:4.
  static RewardWeights preset(std::string_view name);  // throws PreconditionFailed
  // Partial override of preset B, or of the preset named by "base".
  static RewardWeights from_json(const nlohmann::json& j);
  double outcome_process_ratio() const { return out / (evid + tool); }
};

nlohmann::json to_json(const RewardWeights& w);

// Fixed mixing of the evidence and tool terms in the trust-gate statistic.
inline constexpr double kEvidLambda = 0.2;
inline constexpr double kToolLambda = 0.3;
inline constexpr double kAdvantageEpsilon = 1e-6;

// Acoustically confusable pairs that should be contrasted explicitly.
const std::vector<std::pair<Emotion, Emotion>>& overlapping_pairs();

int r_fmt(const Trajectory& t);
double r_phase(const Trajectory& t);
double r_out(EmotionSet predicted_primary, EmotionSet predicted_minor, const LabelSet& gt,
             const std::vector<Emotion>& ranked_pool);
double r_out(const Trajectory& t, const LabelSet& gt);

struct EvidenceTerms {
  double coverage = 0.0;
  double core_first = 0.0;
  double minor_support = 0.0;
  double minor_penalty = 0.0;
  double total() const { return coverage + core_first + minor_support - minor_penalty; }
};

struct ToolTerms {
  double pair_terms = 0.0;
  double budget = 0.0;
  std::size_t calls = 0;
  double total() const { return pair_terms + budget; }
};

// Emotions named by one successful phase-2 observation: semantic-tool
// arguments, plus the prior tool's anchor and returned pairs.
EmotionSet touched_emotions(const Observation& o, const AliasTable& aliases = default_aliases());
EvidenceTerms evidence_terms(const Trajectory& t, const AliasTable& aliases = default_aliases());
ToolTerms tool_terms(const Trajectory& t, const AliasTable& aliases = default_aliases());
double budget_term(std::size_t calls);

inline double s_evid(double r_evid, double r_tool) { return kEvidLambda * r_evid + kToolLambda * r_tool; }

struct GateStats {
  double gate = 1.0;
  std::optional<double> mu_plus;
  std::optional<double> mu_minus;
};

// `s` and `correct` run in parallel. Either partition empty leaves the gate at 1.
GateStats trust_gate(const std::vector<double>& s, const std::vector<bool>& correct);

struct RewardBreakdown {
  std::string utterance_id;
  std::size_t rollout = 0;
  int fmt = 0;
  double phase = 0.0;
  double out = 0.0;
  EvidenceTerms evid_terms;
  ToolTerms tool_terms;
  double evid = 0.0;
  double tool = 0.0;
  double s_evid = 0.0;
  bool correct = false;
  double gate = 1.0;
  double composite = 0.0;
  double ungated = 0.0;
  std::optional<double> advantage;
};

nlohmann::json to_json(const RewardBreakdown& b);

double composite(int fmt, double phase, double out, double evid, double tool, const RewardWeights& w, double gate);

// Components only; gate, composite and advantage are group quantities.
RewardBreakdown score_components(const Trajectory& t, const LabelSet& gt,
                                 const AliasTable& aliases = default_aliases());

// Population standard deviation. Throws GroupTooSmall for fewer than two.
std::vector<double> group_advantages(const std::vector<double>& rewards);

struct GroupScore {
  std::string utterance_id;
  GateStats gate;
  std::vector<RewardBreakdown> rollouts;
  std::size_t excluded = 0;  // backend_unavailable trajectories
  std::vector<std::string> notes;
};

nlohmann::json to_json(const GroupScore& g);

GroupScore score_group(const std::vector<Trajectory>& group, const LabelSet& gt, const RewardWeights& w,
                       const AliasTable& aliases = default_aliases());

}  // namespace adept
