#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "adept/emotion.hpp"

namespace adept {

enum class Phase { One = 1, Two = 2, Three = 3 };
inline int phase_number(Phase p) { return static_cast<int>(p); }
Phase phase_from_number(int n);

enum class Confidence { High, Mid, Low };
std::string_view to_string(Confidence c);
std::optional<Confidence> parse_confidence(std::string_view s);

struct PoolEntry {
  Emotion emotion = Emotion::Neutral;
  Confidence confidence = Confidence::Mid;
  std::optional<int> rank;  // explicit rank if the policy supplied one
};

struct Phase1Output {
  std::vector<PoolEntry> candidate_pool;
  std::optional<std::pair<Emotion, Emotion>> tie_prediction;
  std::string reasoning;

  EmotionSet pool_set() const;
  // Pool order: explicit rank (1-based position when absent), then confidence
  // (high > mid > low), then position. Duplicates keep their first slot.
  std::vector<Emotion> ranked_pool() const;
};

struct Phase2Output {
  EmotionSet primary;
  EmotionSet minor;
  std::optional<bool> resolved_tie;
  std::string reasoning;
};

struct Phase3Output {
  EmotionSet primary;
  EmotionSet minor;
  std::string reasoning;
  std::vector<std::string> evidence;  // observation ids
};

// Violation codes. Format codes zero the reward through the format gate;
// phase codes cost their phase the compliance bonus; anything else is a
// diagnostic that affects no reward term.
namespace violation {
inline constexpr std::string_view kMalformedJson = "malformed_json";
inline constexpr std::string_view kEmptyCandidatePool = "phase1_empty_candidate_pool";
inline constexpr std::string_view kMissingFinalDecision = "phase2_missing_final_decision";
inline constexpr std::string_view kMissingFinalOutput = "phase3_missing_final_output";
inline constexpr std::string_view kInvalidLabel = "invalid_label";
inline constexpr std::string_view kMalformedPolicyMessage = "malformed_policy_message";
inline constexpr std::string_view kPolicyTimeout = "policy_timeout";
inline constexpr std::string_view kForbiddenField = "phase1_forbidden_field";
inline constexpr std::string_view kSemanticLeak = "phase1_semantic_leak";
inline constexpr std::string_view kPhase1ToolCall = "phase1_tool_call";
inline constexpr std::string_view kMissingMandatoryTool = "phase2_missing_mandatory_tool";
inline constexpr std::string_view kPhase3ToolCall = "phase3_tool_call";
// Diagnostics.
inline constexpr std::string_view kPhaseDisagreement = "phase2_phase3_disagreement";
inline constexpr std::string_view kDanglingCitation = "dangling_citation";
inline constexpr std::string_view kInvalidToolCall = "invalid_tool_call";
inline constexpr std::string_view kBudgetExhausted = "call_budget_exhausted";
inline constexpr std::string_view kInvalidConfidence = "invalid_confidence";
inline constexpr std::string_view kMinorOverlapsPrimary = "minor_overlaps_primary";
inline constexpr std::string_view kTransportRetry = "transport_retry";
}  // namespace violation

enum class ViolationKind { Format, Phase, Diagnostic };
ViolationKind violation_kind(std::string_view code);

struct Violation {
  std::string code;
  Phase phase = Phase::One;
  std::string detail;

  ViolationKind kind() const { return violation_kind(code); }
  friend bool operator==(const Violation&, const Violation&) = default;
};

// One immutable ledger entry. `hash` chains over the previous entry's hash.
struct Observation {
  std::string id;  // "obs-<seq>"
  std::size_t seq = 0;
  Phase phase = Phase::Two;
  std::string tool;       // canonical registry name
  std::string called_as;  // name used by the policy (may be an alias)
  nlohmann::json args;
  std::string status;  // "ok" | "error"
  nlohmann::json payload;
  std::string hash;
};

std::string observation_hash(const Observation& obs, std::string_view previous_hash);

struct ToolCallRecord {
  std::size_t seq = 0;
  Phase phase = Phase::Two;
  std::string name;  // as emitted
  nlohmann::json args;
  bool executed = false;
  std::optional<std::string> observation_id;
};

struct Trajectory {
  std::string utterance_id;
  std::size_t rollout = 0;
  std::uint64_t seed = 0;
  std::string policy;
  std::string status = "completed";  // or "backend_unavailable"
  std::array<std::optional<std::string>, 3> raw_outputs;
  std::optional<Phase1Output> phase1;
  std::optional<Phase2Output> phase2;
  std::optional<Phase3Output> phase3;
  std::vector<ToolCallRecord> calls;
  std::vector<Observation> observations;
  std::vector<EmotionSet> candidate_history;
  EmotionSet predicted_primary;
  EmotionSet predicted_minor;
  std::vector<Violation> violations;
  std::vector<Violation> diagnostics;

  bool has_violation(std::string_view code) const;
  // Number of tool calls the policy attempted in phase 2.
  std::size_t phase2_call_count() const;
  const Observation* find_observation(std::string_view id) const;
};

nlohmann::json to_json(const Phase1Output& p);
nlohmann::json to_json(const Phase2Output& p);
nlohmann::json to_json(const Phase3Output& p);
nlohmann::json to_json(const Violation& v);
nlohmann::json to_json(const Observation& o);
nlohmann::json to_json(const Trajectory& t);
Trajectory trajectory_from_json(const nlohmann::json& j);

struct PhaseParse {
  std::optional<Phase1Output> phase1;
  std::optional<Phase2Output> phase2;
  std::optional<Phase3Output> phase3;
  std::vector<Violation> violations;
  std::vector<Violation> diagnostics;

  bool parsed() const { return phase1 || phase2 || phase3; }
};

// Keys banned anywhere inside a phase-1 object.
const std::vector<std::string>& phase1_forbidden_fields();
// Conclusion patterns searched (case-sensitively) in every phase-1 string value.
const std::vector<std::string>& phase1_leak_patterns();

// Parses one policy message for `phase`. Accepts a bare JSON object or one
// wrapped in a ``` fence. Never throws; problems come back as violations.
PhaseParse validate_phase_output(Phase phase, std::string_view raw_text,
                                 const AliasTable& aliases = default_aliases());

}  // namespace adept
