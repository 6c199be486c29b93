#include "adept/prior.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "adept/error.hpp"

namespace adept {

SquareMatrix::SquareMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : n_(rows.size()), data_() {
  data_.reserve(n_ * n_);
  for (const auto& row : rows) {
    if (row.size() != n_) throw Error(ErrorCode::PreconditionFailed, "matrix rows must be square");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

double SquareMatrix::row_sum(std::size_t r) const {
  double s = 0.0;
  for (std::size_t c = 0; c < n_; ++c) s += (*this)(r, c);
  return s;
}

bool SquareMatrix::is_symmetric() const {
  for (std::size_t r = 0; r < n_; ++r) {
    for (std::size_t c = r + 1; c < n_; ++c) {
      if ((*this)(r, c) != (*this)(c, r)) return false;
    }
  }
  return true;
}

nlohmann::json to_json(const SquareMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.size(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < m.size(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

SquareMatrix square_matrix_from_json(const nlohmann::json& j) {
  const std::size_t n = j.size();
  SquareMatrix m(n);
  for (std::size_t r = 0; r < n; ++r) {
    if (j[r].size() != n) throw Error(ErrorCode::PreconditionFailed, "matrix JSON is not square");
    for (std::size_t c = 0; c < n; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

void CooccurrenceCounts::add(const LabelSet& labels) {
  const auto primary = labels.primary().to_vector();
  const auto minor = labels.minor().to_vector();
  for (Emotion p : primary) {
    for (Emotion m : minor) primary_minor(index_of(p), index_of(m)) += 1.0;
  }
  // Every unordered pair inside a tied primary set, so 3-way ties count too.
  for (std::size_t i = 0; i < primary.size(); ++i) {
    for (std::size_t j = i + 1; j < primary.size(); ++j) {
      tie(index_of(primary[i]), index_of(primary[j])) += 1.0;
      tie(index_of(primary[j]), index_of(primary[i])) += 1.0;
    }
  }
}

void CooccurrenceCounts::merge(const CooccurrenceCounts& other) {
  for (std::size_t r = 0; r < kNumEmotions; ++r) {
    for (std::size_t c = 0; c < kNumEmotions; ++c) {
      primary_minor(r, c) += other.primary_minor(r, c);
      tie(r, c) += other.tie(r, c);
    }
  }
}

CooccurrenceCounts accumulate(const std::vector<LabelSet>& labels) {
  CooccurrenceCounts counts;
  for (const auto& l : labels) counts.add(l);
  return counts;
}

CooccurrenceCounts accumulate(const std::vector<UtteranceRecord>& records) {
  CooccurrenceCounts counts;
  for (const auto& r : records) counts.add(r.labels);
  return counts;
}

SquareMatrix normalize(const SquareMatrix& counts, double epsilon) {
  const std::size_t n = counts.size();
  std::vector<double> sums(n);
  for (std::size_t r = 0; r < n; ++r) sums[r] = counts.row_sum(r);
  SquareMatrix out(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double num = counts(a, b);
      if (num == 0.0) continue;
      out(a, b) = num / (std::sqrt(sums[a] * sums[b]) + epsilon);
    }
  }
  return out;
}

SquareMatrix fuse(const SquareMatrix& normalized_pm, const SquareMatrix& normalized_tie, double lambda) {
  if (normalized_pm.size() != normalized_tie.size()) {
    throw Error(ErrorCode::PreconditionFailed, "fuse: matrix sizes differ");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorCode::PreconditionFailed, "fuse: lambda outside [0,1]");
  const std::size_t n = normalized_pm.size();
  SquareMatrix out(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      out(a, b) = lambda * normalized_pm(a, b) + (1.0 - lambda) * normalized_tie(a, b);
    }
  }
  return out;
}

PriorTable build_prior(const CooccurrenceCounts& counts, double lambda, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::PreconditionFailed, "prior epsilon must be positive");
  PriorTable t;
  t.counts = counts;
  t.lambda = lambda;
  t.epsilon = epsilon;
  t.normalized_pm = normalize(counts.primary_minor, epsilon);
  t.normalized_tie = normalize(counts.tie, epsilon);
  t.fused = fuse(t.normalized_pm, t.normalized_tie, lambda);
  return t;
}

nlohmann::json to_json(const PriorTable& t) {
  nlohmann::json labels = nlohmann::json::array();
  for (Emotion e : kAllEmotions) labels.push_back(to_string(e));
  return {{"format", "adept.prior/1"},
          {"labels", labels},
          {"lambda", t.lambda},
          {"epsilon", t.epsilon},
          {"source", {{"fingerprint", t.source_fingerprint}, {"records", t.source_records}}},
          {"counts", {{"primary_minor", to_json(t.counts.primary_minor)}, {"tie", to_json(t.counts.tie)}}},
          {"normalized", {{"primary_minor", to_json(t.normalized_pm)}, {"tie", to_json(t.normalized_tie)}}},
          {"fused", to_json(t.fused)}};
}

PriorTable prior_from_json(const nlohmann::json& j) {
  CooccurrenceCounts counts;
  counts.primary_minor = square_matrix_from_json(j.at("counts").at("primary_minor"));
  counts.tie = square_matrix_from_json(j.at("counts").at("tie"));
  if (counts.primary_minor.size() != kNumEmotions || counts.tie.size() != kNumEmotions) {
    throw Error(ErrorCode::PreconditionFailed, "prior counts must be 8x8");
  }
  // Normalized matrices are re-derived from the raw counts so a hand-edited
  // file cannot disagree with itself.
  PriorTable t = build_prior(counts, j.at("lambda").get<double>(), j.at("epsilon").get<double>());
  if (j.contains("source")) {
    t.source_fingerprint = j["source"].value("fingerprint", "");
    t.source_records = j["source"].value("records", std::size_t{0});
  }
  return t;
}

void save_prior(const PriorTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << to_json(table).dump(2) << "\n";
}

PriorTable load_prior(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open prior '" + path.string() + "'");
  return prior_from_json(nlohmann::json::parse(in));
}

namespace {

struct ScoredPair {
  EmotionPair pair;
  double score;
};

// Descending score, then ascending (first, second) index.
bool ranks_before(const ScoredPair& x, const ScoredPair& y) {
  if (x.score != y.score) return x.score > y.score;
  if (x.pair.first != y.pair.first) return index_of(x.pair.first) < index_of(y.pair.first);
  return index_of(x.pair.second) < index_of(y.pair.second);
}

template <typename Score>
std::vector<ScoredPair> ranked_pairs(EmotionSet candidates, Score score) {
  const auto members = candidates.to_vector();
  std::vector<ScoredPair> pairs;
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      pairs.push_back({{members[i], members[j]}, score(members[i], members[j])});
    }
  }
  std::sort(pairs.begin(), pairs.end(), ranks_before);
  return pairs;
}

}  // namespace

PriorAnswer query(const PriorTable& table, const PriorQuery& q) {
  if (q.candidates.empty()) throw Error(ErrorCode::EmptyCandidateSet, "prior query needs a candidate set");
  if (q.anchor && !q.candidates.contains(*q.anchor)) {
    throw Error(ErrorCode::AnchorNotInCandidates,
                "anchor " + std::string(to_string(*q.anchor)) + " is not in the candidate set");
  }
  PriorAnswer ans;
  if (q.intent == PriorIntent::Verify) {
    auto ranked = ranked_pairs(q.candidates, [&](Emotion a, Emotion b) { return table.strength(a, b); });
    if (q.anchor) {
      const Emotion anchor = *q.anchor;
      std::stable_partition(ranked.begin(), ranked.end(), [&](const ScoredPair& p) {
        return p.pair.first == anchor || p.pair.second == anchor;
      });
    }
    for (std::size_t i = 0; i < ranked.size() && i < q.top_k; ++i) ans.priority_pairs.push_back(ranked[i].pair);
  } else {
    struct Scored {
      Emotion e;
      double score;
    };
    std::vector<Scored> outside;
    const auto members = q.candidates.to_vector();
    for (Emotion c : (EmotionSet::all() - q.candidates).to_vector()) {
      double best = -1.0;
      for (Emotion a : members) best = std::max(best, table.strength(a, c));
      outside.push_back({c, best});
    }
    std::stable_sort(outside.begin(), outside.end(),
                     [](const Scored& x, const Scored& y) { return x.score > y.score; });
    for (std::size_t i = 0; i < outside.size() && i < q.top_l; ++i) ans.suggested_candidates.push_back(outside[i].e);
  }
  if (q.tie_mode) {
    auto ranked = ranked_pairs(q.candidates, [&](Emotion a, Emotion b) { return table.tie_strength(a, b); });
    for (std::size_t i = 0; i < ranked.size() && i < q.top_k; ++i) ans.tie_priority_pairs.push_back(ranked[i].pair);
  }
  return ans;
}

nlohmann::json to_json(const PriorAnswer& answer) {
  auto pairs = [](const std::vector<EmotionPair>& v) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [a, b] : v) out.push_back({to_string(a), to_string(b)});
    return out;
  };
  nlohmann::json suggested = nlohmann::json::array();
  for (Emotion e : answer.suggested_candidates) suggested.push_back(to_string(e));
  return {{"priority_pairs", pairs(answer.priority_pairs)},
          {"suggested_candidates", suggested},
          {"tie_priority_pairs", pairs(answer.tie_priority_pairs)}};
}

}  // namespace adept
