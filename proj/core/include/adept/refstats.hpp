#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "adept/acoustic.hpp"
#include "adept/labels.hpp"

namespace adept {

enum class ReferenceScope { Corpus, Speaker };
std::string_view to_string(ReferenceScope s);
ReferenceScope reference_scope_from_string(std::string_view s);

// Whole-utterance value of every metric.
struct UtteranceSummary {
  std::string id;
  std::optional<std::string> speaker;
  std::map<Metric, double> values;
};

UtteranceSummary summarize_utterance(const UtteranceAcoustics& utt, std::string id = {},
                                     std::optional<std::string> speaker = std::nullopt);

struct GlobalReference {
  ReferenceScope scope = ReferenceScope::Corpus;
  MetricReference corpus;
  std::map<std::string, MetricReference> speakers;
  std::vector<std::string> fallback_speakers;  // too few utterances, served by `corpus`
  std::size_t utterances = 0;
  std::size_t min_per_unit = 10;
  std::string manifest_fingerprint;
  std::string frame_fingerprint;
  std::vector<std::string> notes;

  struct Lookup {
    const MetricReference* table;
    std::string scope;  // "corpus" or "speaker:<id>"
  };
  Lookup for_speaker(const std::optional<std::string>& speaker) const;
};

inline constexpr std::size_t kMinUtterancesPerUnit = 10;

// Median and IQR per metric. In speaker scope every speaker with at least
// `min_per_unit` utterances gets its own block; the rest fall back to corpus.
// Throws InsufficientData when `summaries` is empty.
GlobalReference build_reference(const std::vector<UtteranceSummary>& summaries, ReferenceScope scope,
                                std::size_t min_per_unit = kMinUtterancesPerUnit);

// Reads every record's audio and summarizes it on `jobs` threads.
std::vector<UtteranceSummary> summarize_records(const std::vector<UtteranceRecord>& records,
                                                const FrameParams& params = {}, std::size_t jobs = 1);

nlohmann::json to_json(const GlobalReference& ref);
GlobalReference reference_from_json(const nlohmann::json& j);
void save_reference(const GlobalReference& ref, const std::filesystem::path& path);

struct LoadedReference {
  GlobalReference reference;
  bool fingerprint_mismatch = false;
};
// Flags (does not throw on) a frame-parameter fingerprint that differs from `params`.
LoadedReference load_reference(const std::filesystem::path& path, const FrameParams& params = {});

}  // namespace adept
