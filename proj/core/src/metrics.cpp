#include "adept/metrics.hpp"

#include <algorithm>

#include "adept/error.hpp"

namespace adept {

namespace {

void require_pairs(const std::vector<EvalPair>& pairs) {
  if (pairs.empty()) throw Error(ErrorCode::PreconditionFailed, "metrics need at least one pair");
}

template <typename F>
double mean_of(const std::vector<EvalPair>& pairs, F f) {
  require_pairs(pairs);
  double sum = 0.0;
  for (const auto& p : pairs) sum += f(p);
  return sum / static_cast<double>(pairs.size());
}

double ratio(std::size_t a, std::size_t b) { return static_cast<double>(a) / static_cast<double>(b); }

}  // namespace

EvalPair make_pair(const std::string& id, const LabelSet& gt, EmotionSet primary, EmotionSet minor) {
  return {id, gt, primary, primary | minor};
}

EvalPair make_pair(const Trajectory& t, const LabelSet& gt) {
  return make_pair(t.utterance_id, gt, t.predicted_primary, t.predicted_minor);
}

std::array<ClassScore, kNumEmotions> per_class_scores(const std::vector<EvalPair>& pairs) {
  std::array<ClassScore, kNumEmotions> s{};
  for (std::size_t i = 0; i < kNumEmotions; ++i) s[i].emotion = emotion_at(i);
  for (const auto& p : pairs) {
    const EmotionSet g = p.gt.primary();
    for (Emotion e : kAllEmotions) {
      auto& c = s[index_of(e)];
      const bool in_g = g.contains(e);
      const bool in_p = p.predicted_primary.contains(e);
      if (in_g && in_p) ++c.tp;
      else if (in_g) ++c.fn;
      else if (in_p) ++c.fp;
    }
  }
  for (auto& c : s) {
    c.in_gt = c.tp + c.fn > 0;
    if (c.in_gt) c.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  }
  return s;
}

double primary_macro_f1(const std::vector<EvalPair>& pairs, std::vector<std::string>* notes) {
  require_pairs(pairs);
  const auto s = per_class_scores(pairs);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : s) {
    if (c.f1) {
      sum += *c.f1;
      ++n;
    } else if (notes) {
      notes->push_back(std::string(to_string(c.emotion)) + " absent from GT primaries; excluded from macro-F1");
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

double strict_accuracy(const std::vector<EvalPair>& pairs) {
  return mean_of(pairs, [](const EvalPair& p) { return p.predicted_primary == p.gt.primary() ? 1.0 : 0.0; });
}

double soft_recall(const std::vector<EvalPair>& pairs) {
  return mean_of(pairs, [](const EvalPair& p) { return p.gt.primary().intersects(p.predicted_all) ? 1.0 : 0.0; });
}

double set_recall(const std::vector<EvalPair>& pairs) {
  return mean_of(pairs, [](const EvalPair& p) {
    const EmotionSet g = p.gt.all();
    return g.empty() ? 0.0 : ratio((g & p.predicted_all).size(), g.size());
  });
}

double jaccard(const std::vector<EvalPair>& pairs) {
  return mean_of(pairs, [](const EvalPair& p) {
    const EmotionSet g = p.gt.all();
    const std::size_t u = (g | p.predicted_all).size();
    return u == 0 ? 0.0 : ratio((g & p.predicted_all).size(), u);
  });
}

double avg_cardinality(const std::vector<EvalPair>& pairs) {
  return mean_of(pairs, [](const EvalPair& p) { return static_cast<double>(p.predicted_all.size()); });
}

std::size_t tool_call_count(const Trajectory& t) {
  return static_cast<std::size_t>(std::count_if(t.observations.begin(), t.observations.end(),
                                                [](const Observation& o) { return o.phase == Phase::Two; }));
}

ToolUsageReport tool_usage_report(const std::vector<Trajectory>& trajectories,
                                  const std::map<std::string, LabelSet>& gt) {
  ToolUsageReport r;
  for (const auto& t : trajectories) {
    const auto it = gt.find(t.utterance_id);
    if (it == gt.end()) {
      ++r.unmatched;
      continue;
    }
    auto& b = r.buckets[static_cast<std::size_t>(it->second.consensus_level())];
    ++b.trajectories;
    b.calls.push_back(tool_call_count(t));
    for (const auto& o : t.observations) {
      if (o.phase == Phase::Two) ++b.tool_histogram[o.tool];
    }
  }
  for (auto& b : r.buckets) {
    if (b.calls.empty()) continue;
    double sum = 0.0;
    for (auto c : b.calls) sum += static_cast<double>(c);
    b.mean_calls = sum / static_cast<double>(b.calls.size());
  }
  return r;
}

EvalReport evaluate(const std::vector<Trajectory>& trajectories, const std::map<std::string, LabelSet>& gt) {
  EvalReport r;
  std::vector<EvalPair> pairs;
  std::vector<Trajectory> usable;
  std::size_t unmatched = 0;
  for (const auto& t : trajectories) {
    if (t.status == "backend_unavailable") {
      ++r.excluded;
      continue;
    }
    const auto it = gt.find(t.utterance_id);
    if (it == gt.end()) {
      ++unmatched;
      continue;
    }
    pairs.push_back(make_pair(t, it->second));
    usable.push_back(t);
  }
  r.pairs = pairs.size();
  if (r.excluded) r.notes.push_back(std::to_string(r.excluded) + " backend_unavailable trajectories excluded");
  if (unmatched) r.notes.push_back(std::to_string(unmatched) + " trajectories without GT skipped");
  r.tool_usage = tool_usage_report(usable, gt);
  if (pairs.empty()) {
    r.notes.push_back("no scorable pairs");
    return r;
  }
  r.macro_f1 = primary_macro_f1(pairs, &r.notes);
  r.strict_accuracy = strict_accuracy(pairs);
  r.soft_recall = soft_recall(pairs);
  r.set_recall = set_recall(pairs);
  r.jaccard = jaccard(pairs);
  r.avg_cardinality = avg_cardinality(pairs);
  r.per_class = per_class_scores(pairs);
  return r;
}

nlohmann::json to_json(const ToolUsageReport& r) {
  nlohmann::json buckets = nlohmann::json::object();
  for (std::size_t i = 0; i < r.buckets.size(); ++i) {
    const auto& b = r.buckets[i];
    const std::string key(to_string(static_cast<ConsensusLevel>(i)));
    if (b.trajectories == 0) {
      buckets[key] = {{"absent", true}};
      continue;
    }
    buckets[key] = {{"trajectories", b.trajectories},
                    {"mean_calls", *b.mean_calls},
                    {"calls", b.calls},
                    {"tool_histogram", b.tool_histogram}};
  }
  return {{"by_consensus", buckets}, {"unmatched", r.unmatched}};
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : r.per_class) {
    classes.push_back({{"emotion", to_string(c.emotion)},
                       {"tp", c.tp},
                       {"fp", c.fp},
                       {"fn", c.fn},
                       {"f1", c.f1 ? nlohmann::json(*c.f1) : nlohmann::json(nullptr)}});
  }
  return {{"pairs", r.pairs},
          {"excluded", r.excluded},
          {"avg_size", r.avg_cardinality},
          {"p_macro_f1", r.macro_f1},
          {"soft_recall", r.soft_recall},
          {"set_recall", r.set_recall},
          {"jaccard", r.jaccard},
          {"strict_accuracy", r.strict_accuracy},
          {"per_class", classes},
          {"tool_usage", to_json(r.tool_usage)},
          {"notes", r.notes}};
}

}  // namespace adept
