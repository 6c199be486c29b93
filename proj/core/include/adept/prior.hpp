#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "adept/emotion.hpp"
#include "adept/labels.hpp"

namespace adept {

// Dense row-major square matrix. Small (8x8 in practice) and value-semantic.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}
  SquareMatrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t size() const { return n_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * n_ + c]; }
  double row_sum(std::size_t r) const;
  bool is_symmetric() const;

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

nlohmann::json to_json(const SquareMatrix& m);
SquareMatrix square_matrix_from_json(const nlohmann::json& j);

// Primary-minor and tie co-occurrence counts over the 8-way label space.
struct CooccurrenceCounts {
  SquareMatrix primary_minor{kNumEmotions};
  SquareMatrix tie{kNumEmotions};

  void add(const LabelSet& labels);
  void merge(const CooccurrenceCounts& other);
};

CooccurrenceCounts accumulate(const std::vector<LabelSet>& labels);
CooccurrenceCounts accumulate(const std::vector<UtteranceRecord>& records);

inline constexpr double kDefaultPriorEpsilon = 1e-8;
inline constexpr double kDefaultPriorLambda = 0.5;

// C~[a,b] = C[a,b] / (sqrt(rowsum(a) * rowsum(b)) + eps); zero numerators map to 0.
SquareMatrix normalize(const SquareMatrix& counts, double epsilon = kDefaultPriorEpsilon);

// Elementwise lambda * pm + (1 - lambda) * tie.
SquareMatrix fuse(const SquareMatrix& normalized_pm, const SquareMatrix& normalized_tie,
                  double lambda = kDefaultPriorLambda);

struct PriorTable {
  CooccurrenceCounts counts;
  SquareMatrix normalized_pm{kNumEmotions};
  SquareMatrix normalized_tie{kNumEmotions};
  SquareMatrix fused{kNumEmotions};
  double lambda = kDefaultPriorLambda;
  double epsilon = kDefaultPriorEpsilon;
  std::string source_fingerprint;
  std::size_t source_records = 0;

  double strength(Emotion a, Emotion b) const { return fused(index_of(a), index_of(b)); }
  double tie_strength(Emotion a, Emotion b) const { return normalized_tie(index_of(a), index_of(b)); }
};

PriorTable build_prior(const CooccurrenceCounts& counts, double lambda = kDefaultPriorLambda,
                       double epsilon = kDefaultPriorEpsilon);

nlohmann::json to_json(const PriorTable& table);
PriorTable prior_from_json(const nlohmann::json& j);
void save_prior(const PriorTable& table, const std::filesystem::path& path);
PriorTable load_prior(const std::filesystem::path& path);

enum class PriorIntent { Verify, Expand };

struct PriorQuery {
  EmotionSet candidates;
  PriorIntent intent = PriorIntent::Verify;
  std::optional<Emotion> anchor;
  bool tie_mode = false;
  std::size_t top_k = 3;
  std::size_t top_l = 2;
};

using EmotionPair = std::pair<Emotion, Emotion>;  // first < second by index

// Scheduling signals only: ranked pairs and candidate names, never scores,
// probabilities or a decision.
struct PriorAnswer {
  std::vector<EmotionPair> priority_pairs;
  std::vector<Emotion> suggested_candidates;
  std::vector<EmotionPair> tie_priority_pairs;
};

nlohmann::json to_json(const PriorAnswer& answer);

// Throws EmptyCandidateSet / AnchorNotInCandidates. Score ties break by
// ascending (first, second) emotion index.
PriorAnswer query(const PriorTable& table, const PriorQuery& q);

}  // namespace adept
