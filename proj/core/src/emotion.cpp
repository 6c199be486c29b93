#include "adept/emotion.hpp"

#include <algorithm>
#include <bit>
#include <cctype>

#include <nlohmann/json.hpp>

#include "adept/error.hpp"

namespace adept {

namespace {

constexpr std::array<std::string_view, kNumEmotions> kNames = {
    "Anger", "Sadness", "Happiness", "Surprise", "Fear", "Disgust", "Contempt", "Neutral"};

}  // namespace

std::string_view to_string(Emotion e) { return kNames[index_of(e)]; }

std::size_t EmotionSet::size() const { return static_cast<std::size_t>(std::popcount(bits_)); }

std::vector<Emotion> EmotionSet::to_vector() const {
  std::vector<Emotion> out;
  out.reserve(size());
  for (Emotion e : kAllEmotions) {
    if (contains(e)) out.push_back(e);
  }
  return out;
}

std::vector<std::string> EmotionSet::names() const {
  std::vector<std::string> out;
  for (Emotion e : to_vector()) out.emplace_back(to_string(e));
  return out;
}

std::string to_string(EmotionSet s) {
  std::string out = "{";
  bool first = true;
  for (Emotion e : s.to_vector()) {
    if (!first) out += ", ";
    out += to_string(e);
    first = false;
  }
  out += "}";
  return out;
}

std::string normalize_label(std::string_view raw) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0;
  std::size_t e = raw.size();
  while (b < e && is_space(static_cast<unsigned char>(raw[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(raw[e - 1]))) --e;
  std::string out(raw.substr(b, e - b));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

AliasTable::AliasTable(CanonicalOnlyTag) {
  for (Emotion e : kAllEmotions) table_[normalize_label(to_string(e))] = e;
}

AliasTable::AliasTable() : AliasTable(CanonicalOnlyTag{}) {
  table_["happy"] = Emotion::Happiness;
  table_["sad"] = Emotion::Sadness;
  table_["angry"] = Emotion::Anger;
  table_["neutral"] = Emotion::Neutral;
  table_["surprised"] = Emotion::Surprise;
  table_["fearful"] = Emotion::Fear;
  table_["disgusted"] = Emotion::Disgust;
}

AliasTable AliasTable::canonical_only() { return AliasTable(CanonicalOnlyTag{}); }

void AliasTable::add(std::string alias, Emotion e) {
  const std::string key = normalize_label(alias);
  if (key.empty() || key == "other") {
    throw Error(ErrorCode::PreconditionFailed, "alias must be a non-empty label other than 'Other'");
  }
  table_[key] = e;
}

void AliasTable::extend(const nlohmann::json& aliases) {
  if (!aliases.is_object()) {
    throw Error(ErrorCode::PreconditionFailed, "alias table must be a JSON object");
  }
  for (const auto& [alias, target] : aliases.items()) {
    const auto canonical = AliasTable::canonical_only().lookup(target.get<std::string>());
    if (!canonical) {
      throw Error(ErrorCode::UnknownLabel,
                  "alias '" + alias + "' targets unknown emotion '" + target.get<std::string>() + "'");
    }
    add(alias, *canonical);
  }
}

std::optional<Emotion> AliasTable::lookup(std::string_view raw) const {
  const auto it = table_.find(normalize_label(raw));
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

const AliasTable& default_aliases() {
  static const AliasTable table;
  return table;
}

std::optional<Emotion> try_canonicalize(std::string_view raw, const AliasTable& aliases) {
  return aliases.lookup(raw);
}

Emotion canonicalize_emotion(std::string_view raw, const AliasTable& aliases) {
  if (auto e = aliases.lookup(raw)) return *e;
  throw Error(ErrorCode::UnknownLabel, "unknown emotion label '" + std::string(raw) + "'");
}

bool is_other_label(std::string_view raw) { return normalize_label(raw) == "other"; }

}  // namespace adept
