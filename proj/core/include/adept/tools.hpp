#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "adept/acoustic.hpp"
#include "adept/labels.hpp"
#include "adept/prior.hpp"
#include "adept/semantic.hpp"

namespace adept {

namespace tool {
inline constexpr std::string_view kPrior = "StructuralPriorTool";
inline constexpr std::string_view kPriorAlias = "get_phase2_cooccurrence_prior";
inline constexpr std::string_view kSemanticGate = "run_semantic_gate";
inline constexpr std::string_view kSemanticGateAlias = "verify_semantic_evidence";
inline constexpr std::string_view kCompareEmotions = "compare_emotions";
inline constexpr std::string_view kHotspots = "find_acoustic_hotspots";
inline constexpr std::string_view kAnalyze = "analyze_acoustic_segment";
inline constexpr std::string_view kCompareSegments = "compare_acoustic_segments";
inline constexpr std::string_view kReplay = "replay_audio";
inline constexpr std::string_view kAlignment = "check_semantic_alignment";
}  // namespace tool

struct ToolSpec {
  std::string name;
  std::string description;
  nlohmann::json parameters;  // JSON-schema subset, see validate_schema
};

// The closed registry in a fixed order. Aliases are not listed separately.
const std::vector<ToolSpec>& tool_registry();
const ToolSpec* find_tool(std::string_view canonical_name);
// Resolves aliases; nullopt for names outside the registry.
std::optional<std::string> canonical_tool_name(std::string_view name);
bool is_prior_tool(std::string_view name);
bool is_semantic_tool(std::string_view canonical_name);
bool is_acoustic_tool(std::string_view canonical_name);

// Everything a tool may read. All pointers are borrowed and read-only.
struct ToolContext {
  const UtteranceRecord* record = nullptr;
  const UtteranceAcoustics* acoustics = nullptr;  // null when audio could not be loaded
  std::string audio_error;
  const PriorTable* prior = nullptr;
  AnalyzeOptions analyze;
  HotspotParams hotspots;
  SemanticResources semantic;
  EmotionSet current_candidates;
  // Acoustic observations from the most recent acoustic tool call.
  const std::vector<AcousticObservation>* latest_acoustic = nullptr;
};

struct ToolResult {
  std::string status = "ok";  // "ok" | "error"
  nlohmann::json payload;
  std::vector<AcousticObservation> acoustic;  // structured copy for later alignment checks
  std::optional<EmotionSet> queried_candidates;  // prior-tool candidate set
};

// Validates `args` against the tool schema, then dispatches. Tool-level
// failures (bad labels, out-of-bounds segments, missing audio) come back as
// status "error" with {"error": code, "message": text}; nothing throws.
ToolResult execute_tool(std::string_view name, const nlohmann::json& args, const ToolContext& ctx);

}  // namespace adept
