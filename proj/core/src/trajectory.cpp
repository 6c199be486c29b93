#include "adept/trajectory.hpp"

#include <algorithm>
#include <climits>
#include <regex>

#include "adept/error.hpp"
#include "adept/hash.hpp"

namespace adept {

Phase phase_from_number(int n) {
  if (n < 1 || n > 3) throw Error(ErrorCode::PreconditionFailed, "phase must be 1, 2 or 3");
  return static_cast<Phase>(n);
}

std::string_view to_string(Confidence c) {
  switch (c) {
    case Confidence::High: return "high";
    case Confidence::Mid: return "mid";
    case Confidence::Low: return "low";
  }
  return "mid";
}

std::optional<Confidence> parse_confidence(std::string_view s) {
  const std::string n = normalize_label(s);
  if (n == "high") return Confidence::High;
  if (n == "mid" || n == "medium") return Confidence::Mid;
  if (n == "low") return Confidence::Low;
  return std::nullopt;
}

EmotionSet Phase1Output::pool_set() const {
  EmotionSet s;
  for (const auto& e : candidate_pool) s.insert(e.emotion);
  return s;
}

std::vector<Emotion> Phase1Output::ranked_pool() const {
  std::vector<std::size_t> order(candidate_pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto rank_of = [&](std::size_t i) {
    return candidate_pool[i].rank ? *candidate_pool[i].rank : static_cast<int>(i) + 1;
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rank_of(a) != rank_of(b)) return rank_of(a) < rank_of(b);
    return static_cast<int>(candidate_pool[a].confidence) < static_cast<int>(candidate_pool[b].confidence);
  });
  std::vector<Emotion> out;
  EmotionSet seen;
  for (std::size_t i : order) {
    if (seen.contains(candidate_pool[i].emotion)) continue;
    seen.insert(candidate_pool[i].emotion);
    out.push_back(candidate_pool[i].emotion);
  }
  return out;
}

ViolationKind violation_kind(std::string_view code) {
  using namespace violation;
  for (auto c : {kMalformedJson, kEmptyCandidatePool, kMissingFinalDecision, kMissingFinalOutput, kInvalidLabel,
                 kMalformedPolicyMessage, kPolicyTimeout}) {
    if (code == c) return ViolationKind::Format;
  }
  for (auto c : {kForbiddenField, kSemanticLeak, kPhase1ToolCall, kMissingMandatoryTool, kPhase3ToolCall}) {
    if (code == c) return ViolationKind::Phase;
  }
  return ViolationKind::Diagnostic;
}

std::string observation_hash(const Observation& o, std::string_view previous_hash) {
  const nlohmann::json body = {{"id", o.id},          {"seq", o.seq},       {"phase", phase_number(o.phase)},
                               {"tool", o.tool},      {"called_as", o.called_as}, {"args", o.args},
                               {"status", o.status},  {"payload", o.payload}};
  return sha256_hex(std::string(previous_hash) + "\n" + body.dump());
}

bool Trajectory::has_violation(std::string_view code) const {
  auto match = [&](const Violation& v) { return v.code == code; };
  return std::any_of(violations.begin(), violations.end(), match) ||
         std::any_of(diagnostics.begin(), diagnostics.end(), match);
}

std::size_t Trajectory::phase2_call_count() const {
  return static_cast<std::size_t>(
      std::count_if(calls.begin(), calls.end(), [](const ToolCallRecord& c) { return c.phase == Phase::Two; }));
}

const Observation* Trajectory::find_observation(std::string_view id) const {
  for (const auto& o : observations) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

namespace {

nlohmann::json names(EmotionSet s) { return s.names(); }

EmotionSet set_from(const nlohmann::json& j) {
  EmotionSet s;
  for (const auto& n : j) s.insert(canonicalize_emotion(n.get<std::string>(), AliasTable::canonical_only()));
  return s;
}

Violation violation_from(const nlohmann::json& j) {
  return {j.at("code").get<std::string>(), phase_from_number(j.at("phase").get<int>()), j.value("detail", "")};
}

}  // namespace

nlohmann::json to_json(const Phase1Output& p) {
  nlohmann::json pool = nlohmann::json::array();
  for (const auto& e : p.candidate_pool) {
    nlohmann::json j = {{"emotion", to_string(e.emotion)}, {"confidence", to_string(e.confidence)}};
    if (e.rank) j["rank"] = *e.rank;
    pool.push_back(std::move(j));
  }
  nlohmann::json j = {{"candidate_pool", pool}, {"reasoning", p.reasoning}};
  if (p.tie_prediction) j["tie_prediction"] = {to_string(p.tie_prediction->first), to_string(p.tie_prediction->second)};
  return j;
}

nlohmann::json to_json(const Phase2Output& p) {
  nlohmann::json d = {{"primary_emotions", names(p.primary)}, {"minor_emotions", names(p.minor)}};
  if (p.resolved_tie) d["resolved_tie"] = *p.resolved_tie;
  return {{"final_decision", d}, {"reasoning", p.reasoning}};
}

nlohmann::json to_json(const Phase3Output& p) {
  return {{"final_output",
           {{"primary_emotions", names(p.primary)},
            {"minor_emotions", names(p.minor)},
            {"reasoning", p.reasoning},
            {"evidence", p.evidence}}}};
}

nlohmann::json to_json(const Violation& v) {
  return {{"code", v.code}, {"phase", phase_number(v.phase)}, {"detail", v.detail}};
}

nlohmann::json to_json(const Observation& o) {
  return {{"id", o.id},         {"seq", o.seq},       {"phase", phase_number(o.phase)}, {"tool", o.tool},
          {"called_as", o.called_as}, {"args", o.args}, {"status", o.status},          {"payload", o.payload},
          {"hash", o.hash}};
}

nlohmann::json to_json(const Trajectory& t) {
  nlohmann::json raw = nlohmann::json::array();
  for (const auto& r : t.raw_outputs) raw.push_back(r ? nlohmann::json(*r) : nlohmann::json(nullptr));
  nlohmann::json calls = nlohmann::json::array();
  for (const auto& c : t.calls) {
    calls.push_back({{"seq", c.seq},
                     {"phase", phase_number(c.phase)},
                     {"name", c.name},
                     {"args", c.args},
                     {"executed", c.executed},
                     {"observation_id", c.observation_id ? nlohmann::json(*c.observation_id) : nlohmann::json(nullptr)}});
  }
  nlohmann::json obs = nlohmann::json::array();
  for (const auto& o : t.observations) obs.push_back(to_json(o));
  nlohmann::json history = nlohmann::json::array();
  for (const auto& c : t.candidate_history) history.push_back(names(c));
  nlohmann::json viol = nlohmann::json::array();
  for (const auto& v : t.violations) viol.push_back(to_json(v));
  nlohmann::json diag = nlohmann::json::array();
  for (const auto& v : t.diagnostics) diag.push_back(to_json(v));
  auto opt = [](const auto& p) { return p ? to_json(*p) : nlohmann::json(nullptr); };
  return {{"utterance_id", t.utterance_id},
          {"rollout", t.rollout},
          {"seed", t.seed},
          {"policy", t.policy},
          {"status", t.status},
          {"phases", {{"1", opt(t.phase1)}, {"2", opt(t.phase2)}, {"3", opt(t.phase3)}}},
          {"raw_outputs", raw},
          {"calls", calls},
          {"observations", obs},
          {"candidate_history", history},
          {"prediction", {{"primary", names(t.predicted_primary)}, {"minor", names(t.predicted_minor)}}},
          {"violations", viol},
          {"diagnostics", diag}};
}

Trajectory trajectory_from_json(const nlohmann::json& j) {
  Trajectory t;
  t.utterance_id = j.at("utterance_id").get<std::string>();
  t.rollout = j.value("rollout", std::size_t{0});
  t.seed = j.value("seed", std::uint64_t{0});
  t.policy = j.value("policy", "");
  t.status = j.value("status", "completed");
  const auto& phases = j.at("phases");
  if (!phases["1"].is_null()) {
    Phase1Output p;
    for (const auto& e : phases["1"].at("candidate_pool")) {
      PoolEntry pe;
      pe.emotion = canonicalize_emotion(e.at("emotion").get<std::string>(), AliasTable::canonical_only());
      pe.confidence = parse_confidence(e.at("confidence").get<std::string>()).value_or(Confidence::Low);
      if (e.contains("rank")) pe.rank = e["rank"].get<int>();
      p.candidate_pool.push_back(pe);
    }
    p.reasoning = phases["1"].value("reasoning", "");
    if (phases["1"].contains("tie_prediction")) {
      const auto& tp = phases["1"]["tie_prediction"];
      p.tie_prediction = std::make_pair(canonicalize_emotion(tp.at(0).get<std::string>()),
                                        canonicalize_emotion(tp.at(1).get<std::string>()));
    }
    t.phase1 = std::move(p);
  }
  if (!phases["2"].is_null()) {
    Phase2Output p;
    const auto& d = phases["2"].at("final_decision");
    p.primary = set_from(d.at("primary_emotions"));
    p.minor = set_from(d.at("minor_emotions"));
    if (d.contains("resolved_tie")) p.resolved_tie = d["resolved_tie"].get<bool>();
    p.reasoning = phases["2"].value("reasoning", "");
    t.phase2 = std::move(p);
  }
  if (!phases["3"].is_null()) {
    Phase3Output p;
    const auto& d = phases["3"].at("final_output");
    p.primary = set_from(d.at("primary_emotions"));
    p.minor = set_from(d.at("minor_emotions"));
    p.reasoning = d.value("reasoning", "");
    p.evidence = d.value("evidence", std::vector<std::string>{});
    t.phase3 = std::move(p);
  }
  const auto& raw = j.at("raw_outputs");
  for (std::size_t i = 0; i < 3 && i < raw.size(); ++i) {
    if (!raw[i].is_null()) t.raw_outputs[i] = raw[i].get<std::string>();
  }
  for (const auto& c : j.at("calls")) {
    ToolCallRecord r;
    r.seq = c.at("seq").get<std::size_t>();
    r.phase = phase_from_number(c.at("phase").get<int>());
    r.name = c.at("name").get<std::string>();
    r.args = c.at("args");
    r.executed = c.at("executed").get<bool>();
    if (!c["observation_id"].is_null()) r.observation_id = c["observation_id"].get<std::string>();
    t.calls.push_back(std::move(r));
  }
  for (const auto& o : j.at("observations")) {
    Observation ob;
    ob.id = o.at("id").get<std::string>();
    ob.seq = o.at("seq").get<std::size_t>();
    ob.phase = phase_from_number(o.at("phase").get<int>());
    ob.tool = o.at("tool").get<std::string>();
    ob.called_as = o.value("called_as", ob.tool);
    ob.args = o.at("args");
    ob.status = o.at("status").get<std::string>();
    ob.payload = o.at("payload");
    ob.hash = o.value("hash", "");
    t.observations.push_back(std::move(ob));
  }
  for (const auto& c : j.at("candidate_history")) t.candidate_history.push_back(set_from(c));
  t.predicted_primary = set_from(j.at("prediction").at("primary"));
  t.predicted_minor = set_from(j.at("prediction").at("minor"));
  for (const auto& v : j.at("violations")) t.violations.push_back(violation_from(v));
  for (const auto& v : j.value("diagnostics", nlohmann::json::array())) t.diagnostics.push_back(violation_from(v));
  return t;
}

const std::vector<std::string>& phase1_forbidden_fields() {
  static const std::vector<std::string> f = {"final_prediction", "primary_emotions", "conclusion"};
  return f;
}

const std::vector<std::string>& phase1_leak_patterns() {
  static const std::vector<std::string> p = {R"(Primary\s*[:=])", "I conclude that"};
  return p;
}

namespace {

std::string_view strip_fence(std::string_view s) {
  auto trim = [](std::string_view v) {
    const auto b = v.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return std::string_view{};
    const auto e = v.find_last_not_of(" \t\r\n");
    return v.substr(b, e - b + 1);
  };
  s = trim(s);
  if (s.substr(0, 3) != "```") return s;
  const auto nl = s.find('\n');
  if (nl == std::string_view::npos) return s;
  s.remove_prefix(nl + 1);
  s = trim(s);
  if (s.size() >= 3 && s.substr(s.size() - 3) == "```") s.remove_suffix(3);
  return trim(s);
}

void find_keys(const nlohmann::json& j, const std::vector<std::string>& keys, std::vector<std::string>& found,
               const std::string& path) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      if (std::find(keys.begin(), keys.end(), k) != keys.end()) found.push_back(path + "/" + k);
      find_keys(v, keys, found, path + "/" + k);
    }
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) find_keys(j[i], keys, found, path + "/" + std::to_string(i));
  }
}

void collect_strings(const nlohmann::json& j, std::vector<std::string>& out) {
  if (j.is_string()) {
    out.push_back(j.get<std::string>());
  } else if (j.is_object()) {
    for (const auto& [k, v] : j.items()) collect_strings(v, out);
  } else if (j.is_array()) {
    for (const auto& v : j) collect_strings(v, out);
  }
}

// Canonical labels from a JSON array; unknown labels become violations.
EmotionSet parse_labels(const nlohmann::json& arr, Phase phase, const AliasTable& aliases, PhaseParse& out,
                        const std::string& field) {
  EmotionSet s;
  if (!arr.is_array()) return s;
  for (const auto& v : arr) {
    const std::string raw = v.is_string() ? v.get<std::string>() : v.dump();
    if (auto e = v.is_string() ? try_canonicalize(raw, aliases) : std::nullopt) {
      s.insert(*e);
    } else {
      out.violations.push_back({std::string(violation::kInvalidLabel), phase, field + ": '" + raw + "'"});
    }
  }
  return s;
}

std::size_t count_label_violations(const PhaseParse& p) {
  return static_cast<std::size_t>(std::count_if(p.violations.begin(), p.violations.end(), [](const Violation& v) {
    return v.code == violation::kInvalidLabel;
  }));
}

}  // namespace

PhaseParse validate_phase_output(Phase phase, std::string_view raw_text, const AliasTable& aliases) {
  PhaseParse out;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(strip_fence(raw_text));
  } catch (const nlohmann::json::exception& e) {
    out.violations.push_back({std::string(violation::kMalformedJson), phase, e.what()});
    return out;
  }
  if (!j.is_object()) {
    out.violations.push_back({std::string(violation::kMalformedJson), phase, "top-level value is not an object"});
    return out;
  }

  if (phase == Phase::One) {
    std::vector<std::string> found;
    find_keys(j, phase1_forbidden_fields(), found, "");
    for (const auto& path : found) out.violations.push_back({std::string(violation::kForbiddenField), phase, path});
    std::vector<std::string> strings;
    collect_strings(j, strings);
    for (const auto& pattern : phase1_leak_patterns()) {
      const std::regex re(pattern);
      for (const auto& s : strings) {
        if (std::regex_search(s, re)) {
          out.violations.push_back({std::string(violation::kSemanticLeak), phase, "matched /" + pattern + "/"});
          break;
        }
      }
    }
    Phase1Output p;
    const auto pool = j.value("candidate_pool", nlohmann::json::array());
    if (pool.is_array()) {
      for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto& entry = pool[i];
        const nlohmann::json label = entry.is_object() ? entry.value("emotion", nlohmann::json(nullptr)) : entry;
        auto e = label.is_string() ? try_canonicalize(label.get<std::string>(), aliases) : std::nullopt;
        if (!e) {
          out.violations.push_back({std::string(violation::kInvalidLabel), phase,
                                    "candidate_pool[" + std::to_string(i) + "]: '" +
                                        (label.is_string() ? label.get<std::string>() : label.dump()) + "'"});
          continue;
        }
        PoolEntry pe;
        pe.emotion = *e;
        if (entry.is_object() && entry.contains("confidence")) {
          const auto& c = entry["confidence"];
          auto conf = c.is_string() ? parse_confidence(c.get<std::string>()) : std::nullopt;
          if (conf) {
            pe.confidence = *conf;
          } else {
            pe.confidence = Confidence::Low;
            out.diagnostics.push_back({std::string(violation::kInvalidConfidence), phase, c.dump()});
          }
        }
        if (entry.is_object() && entry.contains("rank") && entry["rank"].is_number_integer()) {
          pe.rank = entry["rank"].get<int>();
        }
        p.candidate_pool.push_back(pe);
      }
    }
    if (p.candidate_pool.empty() && count_label_violations(out) == 0) {
      out.violations.push_back({std::string(violation::kEmptyCandidatePool), phase, "candidate_pool missing or empty"});
    }
    if (j.contains("tie_prediction") && !j["tie_prediction"].is_null()) {
      const EmotionSet tie = parse_labels(j["tie_prediction"], phase, aliases, out, "tie_prediction");
      const auto v = tie.to_vector();
      if (v.size() == 2) p.tie_prediction = std::make_pair(v[0], v[1]);
    }
    if (j.contains("reasoning") && j["reasoning"].is_string()) p.reasoning = j["reasoning"].get<std::string>();
    out.phase1 = std::move(p);
    return out;
  }

  const char* key = phase == Phase::Two ? "final_decision" : "final_output";
  const auto missing = phase == Phase::Two ? violation::kMissingFinalDecision : violation::kMissingFinalOutput;
  if (!j.contains(key) || !j[key].is_object()) {
    out.violations.push_back({std::string(missing), phase, std::string(key) + " missing"});
    return out;
  }
  const auto& body = j[key];
  const EmotionSet primary =
      parse_labels(body.value("primary_emotions", nlohmann::json::array()), phase, aliases, out, "primary_emotions");
  EmotionSet minor =
      parse_labels(body.value("minor_emotions", nlohmann::json::array()), phase, aliases, out, "minor_emotions");
  if (primary.empty() && count_label_violations(out) == 0) {
    out.violations.push_back({std::string(missing), phase, "primary_emotions missing or empty"});
  }
  if (minor.intersects(primary)) {
    out.diagnostics.push_back({std::string(violation::kMinorOverlapsPrimary), phase, to_string(minor & primary)});
    minor = minor - primary;
  }
  if (phase == Phase::Two) {
    Phase2Output p;
    p.primary = primary;
    p.minor = minor;
    if (body.contains("resolved_tie") && body["resolved_tie"].is_boolean()) p.resolved_tie = body["resolved_tie"].get<bool>();
    if (j.contains("reasoning") && j["reasoning"].is_string()) p.reasoning = j["reasoning"].get<std::string>();
    out.phase2 = std::move(p);
  } else {
    Phase3Output p;
    p.primary = primary;
    p.minor = minor;
    if (body.contains("reasoning") && body["reasoning"].is_string()) p.reasoning = body["reasoning"].get<std::string>();
    if (body.contains("evidence") && body["evidence"].is_array()) {
      for (const auto& e : body["evidence"]) {
        if (e.is_string()) p.evidence.push_back(e.get<std::string>());
      }
    }
    out.phase3 = std::move(p);
  }
  return out;
}

}  // namespace adept
