#include "adept/tools.hpp"

#include <algorithm>

#include "adept/error.hpp"
#include "adept/schema.hpp"

namespace adept {

namespace {

using nlohmann::json;

json label_schema() { return {{"type", "string"}, {"minLength", 1}}; }

json span_schema() {
  return {{"type", "object"},
          {"properties", {{"start", {{"type", "number"}, {"minimum", 0}}}, {"end", {{"type", "number"}, {"minimum", 0}}}}},
          {"required", {"start", "end"}},
          {"additionalProperties", false}};
}

json metrics_schema() { return {{"type", "array"}, {"items", {{"type", "string"}}}}; }

std::vector<ToolSpec> build_registry() {
  std::vector<ToolSpec> r;
  r.push_back({std::string(tool::kPrior),
               "Corpus co-occurrence scheduling hints for the current candidate set. verify ranks candidate pairs "
               "worth disambiguating; expand suggests labels outside the set. Returns rankings only.",
               {{"type", "object"},
                {"properties",
                 {{"candidates", {{"type", "array"}, {"items", label_schema()}, {"minItems", 1}}},
                  {"intent", {{"type", "string"}, {"enum", {"verify", "expand"}}}},
                  {"anchor", label_schema()},
                  {"tie_mode", {{"type", "boolean"}}},
                  {"k", {{"type", "integer"}, {"minimum", 1}, {"maximum", 28}}},
                  {"l", {{"type", "integer"}, {"minimum", 1}, {"maximum", 7}}}}},
                {"required", {"candidates", "intent"}},
                {"additionalProperties", false}}});
  r.push_back({std::string(tool::kSemanticGate),
               "Searches the transcript for literal appraisal cues expected for one emotion and returns verbatim "
               "spans, or insufficient_evidence.",
               {{"type", "object"},
                {"properties", {{"emotion", label_schema()}}},
                {"required", {"emotion"}},
                {"additionalProperties", false}}});
  r.push_back({std::string(tool::kCompareEmotions),
               "Checks only the appraisal factors on which two emotions diverge and reports which side each "
               "factor's cues favor.",
               {{"type", "object"},
                {"properties", {{"e1", label_schema()}, {"e2", label_schema()}}},
                {"required", {"e1", "e2"}},
                {"additionalProperties", false}}});
  r.push_back({std::string(tool::kHotspots),
               "Ranks short regions of the audio by event magnitude for one focus type.",
               {{"type", "object"},
                {"properties",
                 {{"focus_type",
                   {{"type", "string"},
                    {"enum", {"energy_burst", "pitch_excursion", "pause_contrast", "voicing_instability"}}}},
                  {"top_n", {{"type", "integer"}, {"minimum", 1}, {"maximum", 10}}}}},
                {"required", {"focus_type"}},
                {"additionalProperties", false}}});
  r.push_back({std::string(tool::kAnalyze),
               "Measures prosodic metrics on one segment, given by start/end seconds or by word indices, and bins "
               "them against corpus and utterance references.",
               {{"type", "object"},
                {"properties",
                 {{"start", {{"type", "number"}, {"minimum", 0}}},
                  {"end", {{"type", "number"}, {"minimum", 0}}},
                  {"word_indices", {{"type", "array"}, {"items", {{"type", "integer"}, {"minimum", 0}}}, {"minItems", 1}}},
                  {"padding_ms", {{"type", "number"}, {"minimum", 0}, {"maximum", 500}}},
                  {"metrics", metrics_schema()}}},
                {"anyOf", {{{"required", {"start", "end"}}}, {{"required", {"word_indices"}}}}},
                {"additionalProperties", false}}});
  r.push_back({std::string(tool::kCompareSegments),
               "Compares two or more segments metric by metric using utterance-relative z gaps.",
               {{"type", "object"},
                {"properties",
                 {{"segments", {{"type", "array"}, {"items", span_schema()}, {"minItems", 2}}}, {"metrics", metrics_schema()}}},
                {"required", {"segments"}},
                {"additionalProperties", false}}});
  const json pair_schema = {
      {"type", "array"}, {"items", {{"type", "number"}, {"minimum", 0}}}, {"minItems", 2}, {"maxItems", 2}};
  r.push_back({std::string(tool::kReplay),
               "Re-measures the given focus regions with every metric and tags the result as a re-audit.",
               {{"type", "object"},
                {"properties",
                 {{"reason", {{"type", "string"}, {"minLength", 1}}},
                  {"focus_points",
                   {{"type", "array"},
                    {"minItems", 1},
                    {"items", {{"anyOf", json::array({span_schema(), pair_schema})}}}}}}},
                {"required", {"reason", "focus_points"}},
                {"additionalProperties", false}}});
  r.push_back({std::string(tool::kAlignment),
               "Checks whether lexical valence in the transcript agrees with the most recent acoustic observations.",
               {{"type", "object"},
                {"properties", {{"hypotheses", {{"type", "array"}, {"items", label_schema()}}}}},
                {"additionalProperties", false}}});
  return r;
}

ToolResult error_result(std::string_view code, const std::string& message) {
  ToolResult r;
  r.status = "error";
  r.payload = {{"error", code}, {"message", message}};
  return r;
}

Emotion label_arg(const json& v) { return canonicalize_emotion(v.get<std::string>()); }

std::vector<Metric> metrics_arg(const json& args) {
  std::vector<Metric> out;
  if (args.contains("metrics")) {
    for (const auto& m : args["metrics"]) out.push_back(metric_from_string(m.get<std::string>()));
  }
  return out;
}

Span span_arg(const json& v) {
  if (v.is_array()) return {v.at(0).get<double>(), v.at(1).get<double>()};
  return {v.at("start").get<double>(), v.at("end").get<double>()};
}

const UtteranceAcoustics& need_audio(const ToolContext& ctx) {
  if (!ctx.acoustics) {
    throw Error(ErrorCode::Io, ctx.audio_error.empty() ? "audio unavailable" : ctx.audio_error);
  }
  return *ctx.acoustics;
}

ToolResult run_prior(const json& args, const ToolContext& ctx) {
  if (!ctx.prior) throw Error(ErrorCode::PreconditionFailed, "no prior table loaded");
  PriorQuery q;
  for (const auto& c : args["candidates"]) q.candidates.insert(label_arg(c));
  q.intent = args["intent"].get<std::string>() == "expand" ? PriorIntent::Expand : PriorIntent::Verify;
  if (args.contains("anchor")) q.anchor = label_arg(args["anchor"]);
  q.tie_mode = args.value("tie_mode", false);
  q.top_k = args.value("k", std::size_t{3});
  q.top_l = args.value("l", std::size_t{2});
  ToolResult r;
  r.queried_candidates = q.candidates;
  r.payload = to_json(query(*ctx.prior, q));
  r.payload["intent"] = args["intent"];
  return r;
}

ToolResult run_analyze(const json& args, const ToolContext& ctx) {
  const auto& utt = need_audio(ctx);
  Span seg;
  std::string source;
  if (args.contains("word_indices")) {
    if (!ctx.record) throw Error(ErrorCode::PreconditionFailed, "no alignment available");
    const double pad = args.value("padding_ms", kDefaultAnchorPadding * 1000.0) / 1000.0;
    seg = anchor_span(ctx.record->alignment, args["word_indices"].get<std::vector<std::size_t>>(),
                      utt.track.duration_s, pad);
    source = "word_indices";
  } else {
    seg = {args["start"].get<double>(), args["end"].get<double>()};
    source = "times";
  }
  ToolResult r;
  r.acoustic.push_back(analyze_segment(utt, seg, metrics_arg(args), ctx.analyze));
  r.payload = to_json(r.acoustic.back());
  r.payload["segment_source"] = source;
  return r;
}

ToolResult run_compare_segments(const json& args, const ToolContext& ctx) {
  const auto& utt = need_audio(ctx);
  std::vector<Span> segs;
  for (const auto& s : args["segments"]) segs.push_back(span_arg(s));
  const auto cmp = compare_segments(utt, segs, metrics_arg(args), ctx.analyze);
  ToolResult r;
  r.acoustic = cmp.segments;
  r.payload = to_json(cmp);
  return r;
}

ToolResult run_replay(const json& args, const ToolContext& ctx) {
  const auto& utt = need_audio(ctx);
  ToolResult r;
  json obs = json::array();
  json errors = json::array();
  for (const auto& fp : args["focus_points"]) {
    const Span s = span_arg(fp);
    try {
      r.acoustic.push_back(analyze_segment(utt, s, {}, ctx.analyze));
      obs.push_back(to_json(r.acoustic.back()));
    } catch (const Error& e) {
      errors.push_back({{"start", s.start_s}, {"end", s.end_s}, {"error", to_string(e.code())}, {"message", e.what()}});
    }
  }
  r.payload = {{"re_audit", true}, {"reason", args["reason"]}, {"observations", obs}, {"errors", errors}};
  if (obs.empty()) r.status = "error";
  return r;
}

ToolResult run_alignment(const json& args, const ToolContext& ctx) {
  if (!ctx.record) throw Error(ErrorCode::PreconditionFailed, "no transcript available");
  EmotionSet hyps = ctx.current_candidates;
  if (args.contains("hypotheses")) {
    hyps = {};
    for (const auto& h : args["hypotheses"]) hyps.insert(label_arg(h));
  }
  std::vector<AcousticObservation> basis;
  std::string basis_note;
  if (ctx.latest_acoustic && !ctx.latest_acoustic->empty()) {
    basis = *ctx.latest_acoustic;
    basis_note = "latest acoustic observation";
  } else if (ctx.acoustics) {
    basis.push_back(analyze_segment(*ctx.acoustics, {0.0, ctx.acoustics->track.duration_s}, {}, ctx.analyze));
    basis_note = "whole utterance (no earlier acoustic observation)";
  } else {
    basis_note = "no acoustic data";
  }
  ToolResult r;
  r.payload = to_json(check_semantic_alignment(basis, ctx.record->transcript, hyps, ctx.semantic));
  r.payload["acoustic_basis"] = basis_note;
  r.payload["hypotheses"] = hyps.names();
  return r;
}

}  // namespace

const std::vector<ToolSpec>& tool_registry() {
  static const std::vector<ToolSpec> registry = build_registry();
  return registry;
}

const ToolSpec* find_tool(std::string_view canonical_name) {
  for (const auto& t : tool_registry()) {
    if (t.name == canonical_name) return &t;
  }
  return nullptr;
}

std::optional<std::string> canonical_tool_name(std::string_view name) {
  if (name == tool::kPriorAlias) return std::string(tool::kPrior);
  if (name == tool::kSemanticGateAlias) return std::string(tool::kSemanticGate);
  if (find_tool(name)) return std::string(name);
  return std::nullopt;
}

bool is_prior_tool(std::string_view name) { return name == tool::kPrior || name == tool::kPriorAlias; }

bool is_semantic_tool(std::string_view n) { return n == tool::kSemanticGate || n == tool::kCompareEmotions; }

bool is_acoustic_tool(std::string_view n) {
  return n == tool::kHotspots || n == tool::kAnalyze || n == tool::kCompareSegments || n == tool::kReplay;
}

ToolResult execute_tool(std::string_view name, const nlohmann::json& args, const ToolContext& ctx) {
  const auto canonical = canonical_tool_name(name);
  if (!canonical) return error_result("unknown_tool", "no tool named '" + std::string(name) + "'");
  const ToolSpec* spec = find_tool(*canonical);
  const auto problems = validate_schema(spec->parameters, args);
  if (!problems.empty()) {
    ToolResult r = error_result("invalid_arguments", problems.front());
    r.payload["problems"] = problems;
    return r;
  }
  try {
    const std::string& n = *canonical;
    if (n == tool::kPrior) return run_prior(args, ctx);
    if (n == tool::kSemanticGate) {
      if (!ctx.record) throw Error(ErrorCode::PreconditionFailed, "no transcript available");
      ToolResult r;
      r.payload = to_json(verify_semantic_evidence(label_arg(args["emotion"]), ctx.record->transcript, ctx.semantic));
      return r;
    }
    if (n == tool::kCompareEmotions) {
      if (!ctx.record) throw Error(ErrorCode::PreconditionFailed, "no transcript available");
      ToolResult r;
      r.payload = to_json(
          compare_emotions(label_arg(args["e1"]), label_arg(args["e2"]), ctx.record->transcript, ctx.semantic));
      return r;
    }
    if (n == tool::kHotspots) {
      HotspotParams hp = ctx.hotspots;
      hp.top_n = args.value("top_n", hp.top_n);
      const FocusType focus = focus_type_from_string(args["focus_type"].get<std::string>());
      ToolResult r;
      r.payload = to_json(find_hotspots(need_audio(ctx), focus, hp));
      r.payload["focus_type"] = args["focus_type"];
      return r;
    }
    if (n == tool::kAnalyze) return run_analyze(args, ctx);
    if (n == tool::kCompareSegments) return run_compare_segments(args, ctx);
    if (n == tool::kReplay) return run_replay(args, ctx);
    if (n == tool::kAlignment) return run_alignment(args, ctx);
  } catch (const Error& e) {
    return error_result(to_string(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return error_result("invalid_arguments", e.what());
  }
  return error_result("unknown_tool", "no handler for '" + std::string(name) + "'");
}

}  // namespace adept
