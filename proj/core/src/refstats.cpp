#include "adept/refstats.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "adept/error.hpp"
#include "adept/parallel.hpp"
#include "adept/stats.hpp"
#include "adept/wav.hpp"

namespace adept {

namespace {

MetricReference robust_table(const std::vector<const UtteranceSummary*>& rows) {
  MetricReference table;
  for (Metric m : kAllMetrics) {
    std::vector<double> v;
    v.reserve(rows.size());
    for (const auto* r : rows) {
      if (auto it = r->values.find(m); it != r->values.end()) v.push_back(it->second);
    }
    table[m] = RobustStat{median(v), iqr(v)};
  }
  return table;
}

}  // namespace

std::string_view to_string(ReferenceScope s) { return s == ReferenceScope::Speaker ? "speaker" : "corpus"; }

ReferenceScope reference_scope_from_string(std::string_view s) {
  if (s == "corpus") return ReferenceScope::Corpus;
  if (s == "speaker") return ReferenceScope::Speaker;
  throw Error(ErrorCode::PreconditionFailed, "scope must be corpus or speaker, got '" + std::string(s) + "'");
}

UtteranceSummary summarize_utterance(const UtteranceAcoustics& utt, std::string id,
                                     std::optional<std::string> speaker) {
  UtteranceSummary s;
  s.id = std::move(id);
  s.speaker = std::move(speaker);
  const FrameRange all{0, utt.track.size()};
  for (Metric m : kAllMetrics) s.values[m] = compute_metric(utt.track, m, all);
  return s;
}

GlobalReference::Lookup GlobalReference::for_speaker(const std::optional<std::string>& speaker) const {
  if (scope == ReferenceScope::Speaker && speaker) {
    if (auto it = speakers.find(*speaker); it != speakers.end()) return {&it->second, "speaker:" + *speaker};
  }
  return {&corpus, "corpus"};
}

GlobalReference build_reference(const std::vector<UtteranceSummary>& summaries, ReferenceScope scope,
                                std::size_t min_per_unit) {
  if (summaries.empty()) throw Error(ErrorCode::InsufficientData, "reference needs at least one utterance");
  GlobalReference ref;
  ref.scope = scope;
  ref.utterances = summaries.size();
  ref.min_per_unit = min_per_unit;
  std::vector<const UtteranceSummary*> all;
  for (const auto& s : summaries) all.push_back(&s);
  ref.corpus = robust_table(all);
  if (summaries.size() < min_per_unit) {
    ref.notes.push_back("corpus has " + std::to_string(summaries.size()) + " utterances, fewer than " +
                        std::to_string(min_per_unit));
  }
  if (scope == ReferenceScope::Speaker) {
    std::map<std::string, std::vector<const UtteranceSummary*>> by_speaker;
    for (const auto& s : summaries) {
      if (s.speaker) by_speaker[*s.speaker].push_back(&s);
    }
    for (const auto& [spk, rows] : by_speaker) {
      if (rows.size() >= min_per_unit) {
        ref.speakers[spk] = robust_table(rows);
      } else {
        ref.fallback_speakers.push_back(spk);
        ref.notes.push_back(std::string(to_string(ErrorCode::InsufficientData)) + ": speaker " + spk + " has " +
                            std::to_string(rows.size()) + " utterances; using corpus scope");
      }
    }
  }
  return ref;
}

std::vector<UtteranceSummary> summarize_records(const std::vector<UtteranceRecord>& records,
                                                const FrameParams& params, std::size_t jobs) {
  std::vector<UtteranceSummary> out(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    const auto& r = records[i];
    const auto utt = prepare_acoustics(read_wav(r.audio), params);
    out[i] = summarize_utterance(utt, r.id, r.speaker);
  });
  return out;
}

nlohmann::json to_json(const GlobalReference& ref) {
  nlohmann::json speakers = nlohmann::json::object();
  for (const auto& [spk, table] : ref.speakers) speakers[spk] = to_json(table);
  return {{"format", "adept.refstats/1"},
          {"scope", to_string(ref.scope)},
          {"utterances", ref.utterances},
          {"min_per_unit", ref.min_per_unit},
          {"fingerprint", {{"manifest", ref.manifest_fingerprint}, {"frames", ref.frame_fingerprint}}},
          {"corpus", to_json(ref.corpus)},
          {"speakers", speakers},
          {"fallback_speakers", ref.fallback_speakers},
          {"notes", ref.notes}};
}

GlobalReference reference_from_json(const nlohmann::json& j) {
  GlobalReference ref;
  ref.scope = reference_scope_from_string(j.value("scope", "corpus"));
  ref.utterances = j.value("utterances", std::size_t{0});
  ref.min_per_unit = j.value("min_per_unit", kMinUtterancesPerUnit);
  if (j.contains("fingerprint")) {
    ref.manifest_fingerprint = j["fingerprint"].value("manifest", "");
    ref.frame_fingerprint = j["fingerprint"].value("frames", "");
  }
  ref.corpus = metric_reference_from_json(j.at("corpus"));
  const nlohmann::json speakers = j.value("speakers", nlohmann::json::object());
  for (const auto& [spk, table] : speakers.items()) {
    ref.speakers[spk] = metric_reference_from_json(table);
  }
  ref.fallback_speakers = j.value("fallback_speakers", std::vector<std::string>{});
  ref.notes = j.value("notes", std::vector<std::string>{});
  return ref;
}

void save_reference(const GlobalReference& ref, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << to_json(ref).dump(2) << "\n";
}

LoadedReference load_reference(const std::filesystem::path& path, const FrameParams& params) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open reference '" + path.string() + "'");
  LoadedReference out;
  out.reference = reference_from_json(nlohmann::json::parse(in));
  out.fingerprint_mismatch = out.reference.frame_fingerprint != params.fingerprint();
  return out;
}

}  // namespace adept
