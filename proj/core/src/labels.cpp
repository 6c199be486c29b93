#include "adept/labels.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace adept {

std::string_view to_string(ConsensusLevel level) {
  switch (level) {
    case ConsensusLevel::High: return "High";
    case ConsensusLevel::Medium: return "Medium";
    case ConsensusLevel::Low: return "Low";
  }
  return "Unknown";
}

ConsensusLevel consensus_for_label_count(std::size_t total_labels) {
  if (total_labels <= 1) return ConsensusLevel::High;
  if (total_labels <= 3) return ConsensusLevel::Medium;
  return ConsensusLevel::Low;
}

LabelSet::LabelSet(EmotionSet primary, EmotionSet minor) : primary_(primary), minor_(minor) {
  if (primary_.empty()) {
    throw Error(ErrorCode::PreconditionFailed, "label set needs a non-empty primary set");
  }
  if (primary_.intersects(minor_)) {
    throw Error(ErrorCode::PreconditionFailed, "primary and minor sets must be disjoint");
  }
}

nlohmann::json to_json(const LabelSet& labels) {
  return {{"primary", labels.primary().names()},
          {"minor", labels.minor().names()},
          {"is_tie", labels.is_tie()},
          {"consensus_level", to_string(labels.consensus_level())},
          {"total_label_count", labels.total_label_count()}};
}

LabelSet construct_labels(const VoteRecord& votes, const AliasTable& aliases) {
  if (votes.votes.empty()) {
    throw Error(ErrorCode::PreconditionFailed,
                "utterance '" + votes.utterance_id + "' has no annotator votes");
  }
  std::array<std::size_t, kNumEmotions> counts{};
  for (const auto& raw : votes.votes) {
    if (is_other_label(raw)) continue;
    ++counts[index_of(canonicalize_emotion(raw, aliases))];
  }
  const std::size_t best = *std::max_element(counts.begin(), counts.end());
  if (best == 0) {
    throw Error(ErrorCode::EmptyAfterFilter,
                "utterance '" + votes.utterance_id + "' has only 'Other' votes");
  }
  EmotionSet primary;
  EmotionSet minor;
  for (Emotion e : kAllEmotions) {
    const std::size_t c = counts[index_of(e)];
    if (c == best) {
      primary.insert(e);
    } else if (c > 0) {
      minor.insert(e);
    }
  }
  return LabelSet(primary, minor);
}

namespace {

bool is_edge_punct(unsigned char c) { return std::ispunct(c) != 0; }

std::string normalize_token(std::string_view tok) {
  std::size_t b = 0;
  std::size_t e = tok.size();
  while (b < e && is_edge_punct(static_cast<unsigned char>(tok[b]))) ++b;
  while (e > b && is_edge_punct(static_cast<unsigned char>(tok[e - 1]))) --e;
  std::string out(tok.substr(b, e - b));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::vector<std::string> normalized_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) {
      std::string tok = normalize_token(text.substr(i, j - i));
      if (!tok.empty()) out.push_back(std::move(tok));
    }
    i = j;
  }
  return out;
}

void validate_alignment(const std::vector<AlignedWord>& alignment, std::string_view transcript) {
  for (std::size_t i = 0; i < alignment.size(); ++i) {
    const auto& w = alignment[i];
    if (!(w.start_s >= 0.0) || !(w.end_s >= w.start_s)) {
      throw Error(ErrorCode::AlignmentError, "alignment word " + std::to_string(i) + " ('" + w.word +
                                                 "') has invalid times");
    }
    if (i > 0) {
      const auto& prev = alignment[i - 1];
      if (w.start_s < prev.start_s || w.end_s < prev.end_s) {
        throw Error(ErrorCode::AlignmentError, "alignment word " + std::to_string(i) + " ('" +
                                                   w.word + "') is not time-monotone");
      }
    }
  }
  const auto expected = normalized_tokens(transcript);
  std::vector<std::string> aligned;
  for (const auto& w : alignment) {
    for (auto& tok : normalized_tokens(w.word)) aligned.push_back(std::move(tok));
  }
  const std::size_t n = std::min(expected.size(), aligned.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (expected[i] != aligned[i]) {
      throw Error(ErrorCode::AlignmentError, "alignment word " + std::to_string(i) + " ('" +
                                                 aligned[i] + "') does not match transcript token '" +
                                                 expected[i] + "'");
    }
  }
  if (expected.size() != aligned.size()) {
    throw Error(ErrorCode::AlignmentError, "alignment has " + std::to_string(aligned.size()) +
                                               " tokens but transcript has " +
                                               std::to_string(expected.size()) + " (first mismatch at word " +
                                               std::to_string(n) + ")");
  }
}

UtteranceRecord parse_manifest_line(const nlohmann::json& line, const AliasTable& aliases) {
  if (!line.is_object()) throw Error(ErrorCode::ManifestParse, "manifest line is not a JSON object");
  auto require = [&](const char* key) -> const nlohmann::json& {
    if (!line.contains(key)) {
      throw Error(ErrorCode::ManifestParse, std::string("missing field '") + key + "'");
    }
    return line.at(key);
  };
  UtteranceRecord rec;
  try {
    rec.id = require("id").get<std::string>();
    rec.audio = require("audio").get<std::string>();
    rec.transcript = require("transcript").get<std::string>();
    for (const auto& w : require("alignment")) {
      rec.alignment.push_back({w.at("w").get<std::string>(), w.at("s").get<double>(), w.at("e").get<double>()});
    }
    rec.votes.utterance_id = rec.id;
    rec.votes.votes = require("votes").get<std::vector<std::string>>();
    if (line.contains("speaker") && line.at("speaker").is_string()) {
      rec.speaker = line.at("speaker").get<std::string>();
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::ManifestParse, std::string("bad field type: ") + ex.what());
  }
  validate_alignment(rec.alignment, rec.transcript);
  rec.labels = construct_labels(rec.votes, aliases);
  return rec;
}

nlohmann::json manifest_line_json(const UtteranceRecord& record) {
  nlohmann::json align = nlohmann::json::array();
  for (const auto& w : record.alignment) align.push_back({{"w", w.word}, {"s", w.start_s}, {"e", w.end_s}});
  nlohmann::json j = {{"id", record.id},
                      {"audio", record.audio.generic_string()},
                      {"transcript", record.transcript},
                      {"alignment", align},
                      {"votes", record.votes.votes}};
  if (record.speaker) j["speaker"] = *record.speaker;
  return j;
}

ManifestLoad load_manifest(const std::filesystem::path& path, const ManifestOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open manifest '" + path.string() + "'");
  const AliasTable& aliases = options.aliases ? *options.aliases : default_aliases();
  const auto base = path.parent_path();

  ManifestLoad out;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    ++out.lines_read;
    try {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(text);
      } catch (const nlohmann::json::parse_error& ex) {
        throw Error(ErrorCode::ManifestParse, std::string("invalid JSON: ") + ex.what());
      }
      UtteranceRecord rec = parse_manifest_line(j, aliases);
      if (rec.audio.is_relative() && !base.empty()) rec.audio = base / rec.audio;
      out.records.push_back(std::move(rec));
    } catch (const Error& err) {
      if (options.strict) {
        throw Error(ErrorCode::ManifestParse, path.string() + ":" + std::to_string(line_no) + ": [" +
                                                  std::string(to_string(err.code())) + "] " + err.what());
      }
      if (err.code() == ErrorCode::EmptyAfterFilter) ++out.skipped_empty_after_filter;
      out.issues.push_back({line_no, err.code(), err.what()});
    }
  }
  return out;
}

double StatsReport::per_emotion_tie_rate(Emotion e) const {
  const std::size_t denom = primary_counts[index_of(e)];
  return denom == 0 ? 0.0 : static_cast<double>(primary_tie_counts[index_of(e)]) / static_cast<double>(denom);
}

StatsReport corpus_stats(const std::vector<LabelSet>& labels) {
  if (labels.empty()) throw Error(ErrorCode::PreconditionFailed, "corpus_stats needs at least one record");
  StatsReport s;
  s.n = labels.size();
  std::vector<std::size_t> counts;
  counts.reserve(labels.size());
  std::size_t primary_total = 0;
  std::size_t minor_total = 0;
  for (const auto& l : labels) {
    const std::size_t total = l.total_label_count();
    counts.push_back(total);
    primary_total += l.primary().size();
    minor_total += l.minor().size();
    if (l.is_tie()) ++s.tie_count;
    ++s.consensus_histogram[static_cast<std::size_t>(l.consensus_level())];
    for (Emotion e : l.primary().to_vector()) {
      ++s.primary_counts[index_of(e)];
      if (l.is_tie()) ++s.primary_tie_counts[index_of(e)];
    }
    const std::size_t m = l.minor().size();
    if (s.minor_count_histogram.size() <= m) s.minor_count_histogram.resize(m + 1, 0);
    ++s.minor_count_histogram[m];
  }
  const double n = static_cast<double>(s.n);
  s.tie_rate = static_cast<double>(s.tie_count) / n;
  const double sum = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  s.mean_labels = sum / n;
  double sq = 0.0;
  for (std::size_t c : counts) sq += (static_cast<double>(c) - s.mean_labels) * (static_cast<double>(c) - s.mean_labels);
  s.std_labels = std::sqrt(sq / n);
  std::sort(counts.begin(), counts.end());
  s.min_labels = counts.front();
  s.max_labels = counts.back();
  const std::size_t mid = counts.size() / 2;
  s.median_labels = counts.size() % 2 == 1
                        ? static_cast<double>(counts[mid])
                        : 0.5 * static_cast<double>(counts[mid - 1] + counts[mid]);
  s.mean_primary = static_cast<double>(primary_total) / n;
  s.mean_minor = static_cast<double>(minor_total) / n;
  return s;
}

StatsReport corpus_stats(const std::vector<UtteranceRecord>& records) {
  std::vector<LabelSet> labels;
  labels.reserve(records.size());
  for (const auto& r : records) labels.push_back(r.labels);
  return corpus_stats(labels);
}

nlohmann::json to_json(const StatsReport& s) {
  nlohmann::json per_emotion = nlohmann::json::object();
  for (Emotion e : kAllEmotions) {
    const std::size_t c = s.primary_counts[index_of(e)];
    per_emotion[std::string(to_string(e))] = {
        {"primary_count", c},
        {"primary_share", s.n == 0 ? 0.0 : static_cast<double>(c) / static_cast<double>(s.n)},
        {"tie_rate", s.per_emotion_tie_rate(e)}};
  }
  return {{"n", s.n},
          {"tie_count", s.tie_count},
          {"tie_rate", s.tie_rate},
          {"labels_per_audio", {{"mean", s.mean_labels},
                                {"std", s.std_labels},
                                {"median", s.median_labels},
                                {"min", s.min_labels},
                                {"max", s.max_labels}}},
          {"mean_primary", s.mean_primary},
          {"mean_minor", s.mean_minor},
          {"consensus_histogram", {{"High", s.consensus_histogram[0]},
                                   {"Medium", s.consensus_histogram[1]},
                                   {"Low", s.consensus_histogram[2]}}},
          {"per_emotion", per_emotion},
          {"minor_count_histogram", s.minor_count_histogram}};
}

}  // namespace adept
