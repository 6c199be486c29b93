#include "adept/reward.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "adept/error.hpp"
#include "adept/tools.hpp"

namespace adept {

namespace {

std::optional<Emotion> label_of(const nlohmann::json& v, const AliasTable& aliases) {
  if (!v.is_string()) return std::nullopt;
  return try_canonicalize(v.get<std::string>(), aliases);
}

std::vector<Emotion> ranked_pool_of(const Trajectory& t) {
  return t.phase1 ? t.phase1->ranked_pool() : std::vector<Emotion>{};
}

}  // namespace

RewardWeights RewardWeights::preset(std::string_view name) {
  RewardWeights w;
  if (name == "A") {
    w.name = "A";
    w.out = 0.4;
    w.evid = 0.04;
    w.tool = 0.06;
  } else if (name == "B") {
    w.name = "B";
  } else if (name == "C") {
    w.name = "C";
    w.out = 0.1;
    w.evid = 0.16;
    w.tool = 0.24;
  } else {
    throw Error(ErrorCode::PreconditionFailed, "unknown weight preset '" + std::string(name) + "'");
  }
  return w;
}

RewardWeights RewardWeights::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::PreconditionFailed, "weights must be a JSON object");
  RewardWeights w = preset(j.value("base", std::string("B")));
  w.name = j.value("name", std::string("custom"));
  const std::pair<const char*, double*> fields[] = {
      {"fmt", &w.fmt}, {"phase", &w.phase}, {"out", &w.out}, {"evid", &w.evid}, {"tool", &w.tool}};
  for (const auto& [key, slot] : fields) {
    const std::string prefixed = std::string("w_") + key;
    const nlohmann::json* v = j.contains(key) ? &j[key] : j.contains(prefixed) ? &j[prefixed] : nullptr;
    if (!v) continue;
    if (!v->is_number()) throw Error(ErrorCode::PreconditionFailed, std::string("weight ") + key + " is not a number");
    *slot = v->get<double>();
    if (*slot < 0.0) throw Error(ErrorCode::PreconditionFailed, std::string("weight ") + key + " is negative");
  }
  return w;
}

nlohmann::json to_json(const RewardWeights& w) {
  return {{"name", w.name}, {"fmt", w.fmt}, {"phase", w.phase}, {"out", w.out}, {"evid", w.evid}, {"tool", w.tool}};
}

const std::vector<std::pair<Emotion, Emotion>>& overlapping_pairs() {
  static const std::vector<std::pair<Emotion, Emotion>> pairs = {{Emotion::Happiness, Emotion::Surprise},
                                                                 {Emotion::Contempt, Emotion::Disgust}};
  return pairs;
}

int r_fmt(const Trajectory& t) {
  for (const auto& v : t.violations) {
    if (v.kind() == ViolationKind::Format) return 0;
  }
  const bool ok = t.phase1 && !t.phase1->candidate_pool.empty() && t.phase2 && !t.phase2->primary.empty() &&
                  t.phase3 && !t.phase3->primary.empty();
  return ok ? 1 : 0;
}

double r_phase(const Trajectory& t) {
  double total = 0.0;
  for (Phase p : {Phase::One, Phase::Two, Phase::Three}) {
    const bool broken = std::any_of(t.violations.begin(), t.violations.end(), [&](const Violation& v) {
      return v.phase == p && v.kind() == ViolationKind::Phase;
    });
    total += broken ? -2.0 : 1.0;
  }
  return total;
}

double r_out(EmotionSet p, EmotionSet m, const LabelSet& gt, const std::vector<Emotion>& ranked_pool) {
  const EmotionSet gt_pri = gt.primary();
  const EmotionSet gt_min = gt.minor();
  double r = 0.0;
  if (p.intersects(gt_pri)) r += 1.0;
  EmotionSet top3;
  for (std::size_t i = 0; i < ranked_pool.size() && i < 3; ++i) top3.insert(ranked_pool[i]);
  if (gt_pri.subset_of(top3)) r += 0.5;
  const std::size_t uni = (m | gt_min).size();
  const double jaccard = uni == 0 ? 1.0 : static_cast<double>((m & gt_min).size()) / static_cast<double>(uni);
  r += 0.3 * jaccard;
  if (gt.is_tie() && p == gt_pri) r += 0.2;
  return std::clamp(r, 0.0, 2.0);
}

double r_out(const Trajectory& t, const LabelSet& gt) {
  return r_out(t.predicted_primary, t.predicted_minor, gt, ranked_pool_of(t));
}

EmotionSet touched_emotions(const Observation& o, const AliasTable& aliases) {
  EmotionSet s;
  if (o.status != "ok") return s;
  auto add = [&](const nlohmann::json& v) {
    if (auto e = label_of(v, aliases)) s.insert(*e);
  };
  if (is_semantic_tool(o.tool)) {
    for (const char* key : {"emotion", "e1", "e2"}) {
      if (o.args.contains(key)) add(o.args[key]);
    }
  } else if (is_prior_tool(o.tool)) {
    if (o.args.contains("anchor")) add(o.args["anchor"]);
    for (const char* key : {"priority_pairs", "tie_priority_pairs"}) {
      if (!o.payload.contains(key)) continue;
      for (const auto& pair : o.payload[key]) {
        for (const auto& e : pair) add(e);
      }
    }
  }
  return s;
}

EvidenceTerms evidence_terms(const Trajectory& t, const AliasTable& aliases) {
  EvidenceTerms terms;
  const auto ranked = ranked_pool_of(t);
  EmotionSet pool;
  for (Emotion e : ranked) pool.insert(e);

  EmotionSet touched;
  for (const auto& o : t.observations) {
    if (o.phase == Phase::Two) touched = touched | touched_emotions(o, aliases);
  }
  if (!pool.empty()) {
    terms.coverage = std::min(1.0, static_cast<double>((touched & pool).size()) / static_cast<double>(pool.size()));
    EmotionSet early;
    std::size_t seen = 0;
    for (const auto& c : t.calls) {
      if (c.phase != Phase::Two) continue;
      if (seen++ == 3) break;
      if (!c.observation_id) continue;
      if (const auto* o = t.find_observation(*c.observation_id)) early = early | touched_emotions(*o, aliases);
    }
    EmotionSet core;
    for (std::size_t i = 0; i < ranked.size() && i < 2; ++i) core.insert(ranked[i]);
    if (core.subset_of(early)) terms.core_first = 0.5;
  }
  const EmotionSet m = t.predicted_minor;
  if (!m.empty()) {
    terms.minor_support = 0.5 * static_cast<double>((m & touched).size()) / static_cast<double>(m.size());
  }
  terms.minor_penalty = std::min(2.0, 1.0 * static_cast<double>((m - touched).size()));
  return terms;
}

double budget_term(std::size_t n) {
  if (n >= 2 && n <= 8) return 0.3;
  const std::size_t outside = n < 2 ? 2 - n : n - 8;
  return -std::min(0.6, 0.15 * static_cast<double>(outside));
}

ToolTerms tool_terms(const Trajectory& t, const AliasTable& aliases) {
  ToolTerms terms;
  const EmotionSet pool = t.phase1 ? t.phase1->pool_set() : EmotionSet{};
  for (const auto& [a, b] : overlapping_pairs()) {
    if (!pool.contains(a) || !pool.contains(b)) continue;
    const bool compared = std::any_of(t.observations.begin(), t.observations.end(), [&](const Observation& o) {
      if (o.phase != Phase::Two || o.tool != tool::kCompareEmotions || o.status != "ok") return false;
      const auto e1 = label_of(o.args.value("e1", nlohmann::json()), aliases);
      const auto e2 = label_of(o.args.value("e2", nlohmann::json()), aliases);
      return e1 && e2 && EmotionSet{*e1, *e2} == EmotionSet{a, b};
    });
    terms.pair_terms += compared ? 1.0 : -1.0;
  }
  terms.calls = static_cast<std::size_t>(std::count_if(t.observations.begin(), t.observations.end(),
                                                       [](const Observation& o) { return o.phase == Phase::Two; }));
  terms.budget = budget_term(terms.calls);
  return terms;
}

GateStats trust_gate(const std::vector<double>& s, const std::vector<bool>& correct) {
  if (s.size() != correct.size()) throw Error(ErrorCode::PreconditionFailed, "gate inputs differ in length");
  double sp = 0.0, sm = 0.0;
  std::size_t np = 0, nm = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (correct[i]) {
      sp += s[i];
      ++np;
    } else {
      sm += s[i];
      ++nm;
    }
  }
  GateStats g;
  if (np) g.mu_plus = sp / static_cast<double>(np);
  if (nm) g.mu_minus = sm / static_cast<double>(nm);
  if (g.mu_plus && g.mu_minus && *g.mu_plus < *g.mu_minus) g.gate = std::exp(*g.mu_plus - *g.mu_minus);
  return g;
}

double composite(int fmt, double phase, double out, double evid, double tool, const RewardWeights& w, double gate) {
  if (fmt != 1) return 0.0;
  return w.fmt * fmt + w.phase * phase + w.out * out + gate * (w.evid * evid + w.tool * tool);
}

RewardBreakdown score_components(const Trajectory& t, const LabelSet& gt, const AliasTable& aliases) {
  RewardBreakdown b;
  b.utterance_id = t.utterance_id;
  b.rollout = t.rollout;
  b.fmt = r_fmt(t);
  b.phase = r_phase(t);
  b.out = r_out(t, gt);
  b.evid_terms = evidence_terms(t, aliases);
  b.tool_terms = tool_terms(t, aliases);
  b.evid = b.evid_terms.total();
  b.tool = b.tool_terms.total();
  b.s_evid = s_evid(b.evid, b.tool);
  b.correct = t.predicted_primary.intersects(gt.primary());
  return b;
}

std::vector<double> group_advantages(const std::vector<double>& r) {
  if (r.size() < 2) throw Error(ErrorCode::GroupTooSmall, "advantages need at least two rollouts");
  double mean = 0.0;
  for (double x : r) mean += x;
  mean /= static_cast<double>(r.size());
  double var = 0.0;
  for (double x : r) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(r.size()));
  std::vector<double> a;
  a.reserve(r.size());
  for (double x : r) a.push_back((x - mean) / (sd + kAdvantageEpsilon));
  return a;
}

nlohmann::json to_json(const RewardBreakdown& b) {
  return {{"utterance_id", b.utterance_id},
          {"rollout", b.rollout},
          {"r_fmt", b.fmt},
          {"r_phase", b.phase},
          {"r_out", b.out},
          {"r_evid", b.evid},
          {"r_evid_terms",
           {{"coverage", b.evid_terms.coverage},
            {"core_first", b.evid_terms.core_first},
            {"minor_support", b.evid_terms.minor_support},
            {"minor_penalty", b.evid_terms.minor_penalty}}},
          {"r_tool", b.tool},
          {"r_tool_terms", {{"pairs", b.tool_terms.pair_terms}, {"budget", b.tool_terms.budget}, {"calls", b.tool_terms.calls}}},
          {"s_evid", b.s_evid},
          {"correct", b.correct},
          {"gate", b.gate},
          {"composite", b.composite},
          {"ungated_composite", b.ungated},
          {"advantage", b.advantage ? nlohmann::json(*b.advantage) : nlohmann::json(nullptr)}};
}

nlohmann::json to_json(const GroupScore& g) {
  nlohmann::json rollouts = nlohmann::json::array();
  for (const auto& b : g.rollouts) rollouts.push_back(to_json(b));
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"utterance_id", g.utterance_id},
          {"gate", g.gate.gate},
          {"mu_plus", opt(g.gate.mu_plus)},
          {"mu_minus", opt(g.gate.mu_minus)},
          {"excluded", g.excluded},
          {"notes", g.notes},
          {"rollouts", rollouts}};
}

GroupScore score_group(const std::vector<Trajectory>& group, const LabelSet& gt, const RewardWeights& w,
                       const AliasTable& aliases) {
  GroupScore g;
  if (!group.empty()) g.utterance_id = group.front().utterance_id;
  std::vector<double> s;
  std::vector<bool> correct;
  for (const auto& t : group) {
    if (t.status == "backend_unavailable") {
      ++g.excluded;
      continue;
    }
    g.rollouts.push_back(score_components(t, gt, aliases));
    s.push_back(g.rollouts.back().s_evid);
    correct.push_back(g.rollouts.back().correct);
  }
  g.gate = trust_gate(s, correct);
  std::vector<double> rewards;
  for (auto& b : g.rollouts) {
    b.gate = g.gate.gate;
    b.composite = composite(b.fmt, b.phase, b.out, b.evid, b.tool, w, b.gate);
    b.ungated = composite(b.fmt, b.phase, b.out, b.evid, b.tool, w, 1.0);
    rewards.push_back(b.composite);
  }
  if (rewards.size() >= 2) {
    const auto adv = group_advantages(rewards);
    for (std::size_t i = 0; i < adv.size(); ++i) g.rollouts[i].advantage = adv[i];
  } else {
    g.notes.push_back("fewer than two scorable rollouts; advantages not computed");
  }
  if (g.excluded) g.notes.push_back(std::to_string(g.excluded) + " rollout(s) excluded as backend_unavailable");
  return g;
}

}  // namespace adept
