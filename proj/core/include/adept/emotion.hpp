#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace adept {

// Closed 8-way label space. The integer value is the stable index used by
// every matrix and tie-break in the library.
enum class Emotion : std::uint8_t {
  Anger = 0,
  Sadness = 1,
  Happiness = 2,
  Surprise = 3,
  Fear = 4,
  Disgust = 5,
  Contempt = 6,
  Neutral = 7,
};

inline constexpr std::size_t kNumEmotions = 8;

inline constexpr std::array<Emotion, kNumEmotions> kAllEmotions = {
    Emotion::Anger, Emotion::Sadness,  Emotion::Happiness, Emotion::Surprise,
    Emotion::Fear,  Emotion::Disgust, Emotion::Contempt,  Emotion::Neutral};

constexpr std::size_t index_of(Emotion e) { return static_cast<std::size_t>(e); }
constexpr Emotion emotion_at(std::size_t i) { return static_cast<Emotion>(i); }

std::string_view to_string(Emotion e);

// Small value-type set over the 8 emotions. Iteration is always in index
// order, which keeps every derived artifact deterministic.
class EmotionSet {
 public:
  constexpr EmotionSet() = default;
  EmotionSet(std::initializer_list<Emotion> items) {
    for (Emotion e : items) insert(e);
  }

  static constexpr EmotionSet from_bits(std::uint8_t bits) {
    EmotionSet s;
    s.bits_ = bits;
    return s;
  }
  static constexpr EmotionSet all() { return from_bits(0xFF); }

  constexpr bool contains(Emotion e) const { return (bits_ >> index_of(e)) & 1U; }
  constexpr void insert(Emotion e) { bits_ |= static_cast<std::uint8_t>(1U << index_of(e)); }
  constexpr void erase(Emotion e) { bits_ &= static_cast<std::uint8_t>(~(1U << index_of(e))); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint8_t bits() const { return bits_; }

  std::size_t size() const;
  std::vector<Emotion> to_vector() const;
  std::vector<std::string> names() const;

  bool subset_of(EmotionSet other) const { return (bits_ & ~other.bits_) == 0; }
  bool intersects(EmotionSet other) const { return (bits_ & other.bits_) != 0; }

  friend constexpr EmotionSet operator&(EmotionSet a, EmotionSet b) {
    return from_bits(a.bits_ & b.bits_);
  }
  friend constexpr EmotionSet operator|(EmotionSet a, EmotionSet b) {
    return from_bits(a.bits_ | b.bits_);
  }
  friend constexpr EmotionSet operator-(EmotionSet a, EmotionSet b) {
    return from_bits(static_cast<std::uint8_t>(a.bits_ & ~b.bits_));
  }
  friend constexpr bool operator==(EmotionSet a, EmotionSet b) = default;

 private:
  std::uint8_t bits_ = 0;
};

std::string to_string(EmotionSet s);

// Maps raw label strings to canonical emotions. Matching is on the trimmed,
// case-folded string; the alias table can be extended from configuration.
class AliasTable {
 public:
  // Canonical names plus the minimal default aliases (happy, sad, angry, ...).
  AliasTable();
  static AliasTable canonical_only();

  void add(std::string alias, Emotion e);
  // JSON object {"alias": "Emotion", ...}; unknown targets throw UnknownLabel.
  void extend(const nlohmann::json& aliases);

  std::optional<Emotion> lookup(std::string_view raw) const;
  const std::map<std::string, Emotion>& entries() const { return table_; }

 private:
  struct CanonicalOnlyTag {};
  explicit AliasTable(CanonicalOnlyTag);
  std::map<std::string, Emotion> table_;
};

const AliasTable& default_aliases();

// Throws Error{UnknownLabel} for anything outside the canonical set and the
// alias table, including "Other".
Emotion canonicalize_emotion(std::string_view raw, const AliasTable& aliases = default_aliases());
std::optional<Emotion> try_canonicalize(std::string_view raw,
                                        const AliasTable& aliases = default_aliases());

// "Other" (case/whitespace-insensitive) is the out-of-taxonomy annotator option.
bool is_other_label(std::string_view raw);

std::string normalize_label(std::string_view raw);

}  // namespace adept
