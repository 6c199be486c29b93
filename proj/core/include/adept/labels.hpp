#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "adept/emotion.hpp"
#include "adept/error.hpp"

namespace adept {

enum class ConsensusLevel { High = 0, Medium = 1, Low = 2 };

std::string_view to_string(ConsensusLevel level);

// High: 1 label, Medium: 2-3 labels, Low: 4 or more.
ConsensusLevel consensus_for_label_count(std::size_t total_labels);

struct VoteRecord {
  std::string utterance_id;
  std::vector<std::string> votes;
};

// Ambiguity-preserving ground truth for one utterance. `primary` holds every
// class with the maximal vote count; `minor` every other voted class.
class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(EmotionSet primary, EmotionSet minor);

  EmotionSet primary() const { return primary_; }
  EmotionSet minor() const { return minor_; }
  EmotionSet all() const { return primary_ | minor_; }
  bool is_tie() const { return primary_.size() >= 2; }
  std::size_t total_label_count() const { return primary_.size() + minor_.size(); }
  ConsensusLevel consensus_level() const { return consensus_for_label_count(total_label_count()); }

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  EmotionSet primary_;
  EmotionSet minor_;
};

nlohmann::json to_json(const LabelSet& labels);

// Plurality consensus: "Other" votes are dropped first, then all classes at
// the maximal count become primary. Throws EmptyAfterFilter when nothing
// remains and UnknownLabel for votes outside the taxonomy.
LabelSet construct_labels(const VoteRecord& votes, const AliasTable& aliases = default_aliases());

struct AlignedWord {
  std::string word;
  double start_s = 0.0;
  double end_s = 0.0;
};

struct UtteranceRecord {
  std::string id;
  std::filesystem::path audio;
  std::string transcript;
  std::vector<AlignedWord> alignment;
  VoteRecord votes;
  LabelSet labels;
  std::optional<std::string> speaker;
};

// Lowercased transcript tokens with surrounding punctuation stripped.
std::vector<std::string> normalized_tokens(std::string_view text);

// Throws AlignmentError naming the first offending word index.
void validate_alignment(const std::vector<AlignedWord>& alignment, std::string_view transcript);

struct ManifestIssue {
  std::size_t line = 0;  // 1-based
  ErrorCode code = ErrorCode::ManifestParse;
  std::string message;
};

struct ManifestOptions {
  bool strict = false;
  const AliasTable* aliases = nullptr;  // defaults to default_aliases()
};

struct ManifestLoad {
  std::vector<UtteranceRecord> records;
  std::vector<ManifestIssue> issues;
  std::size_t lines_read = 0;
  std::size_t skipped_empty_after_filter = 0;
};

// Parses a JSONL manifest. Record order equals file order. In strict mode the
// first bad line throws Error{ManifestParse} carrying the line number.
ManifestLoad load_manifest(const std::filesystem::path& path, const ManifestOptions& options = {});

UtteranceRecord parse_manifest_line(const nlohmann::json& line, const AliasTable& aliases);
nlohmann::json manifest_line_json(const UtteranceRecord& record);

struct StatsReport {
  std::size_t n = 0;
  std::size_t tie_count = 0;
  double tie_rate = 0.0;
  double mean_labels = 0.0;
  double std_labels = 0.0;
  double median_labels = 0.0;
  std::size_t min_labels = 0;
  std::size_t max_labels = 0;
  double mean_primary = 0.0;
  double mean_minor = 0.0;
  std::array<std::size_t, 3> consensus_histogram{};          // High, Medium, Low
  std::array<std::size_t, kNumEmotions> primary_counts{};    // records with e in primary
  std::array<std::size_t, kNumEmotions> primary_tie_counts{};  // ... of which tied
  std::vector<std::size_t> minor_count_histogram;             // index = |minor|

  double per_emotion_tie_rate(Emotion e) const;
};

StatsReport corpus_stats(const std::vector<LabelSet>& labels);
StatsReport corpus_stats(const std::vector<UtteranceRecord>& records);
nlohmann::json to_json(const StatsReport& stats);

}  // namespace adept
