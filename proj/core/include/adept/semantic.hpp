#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "adept/acoustic.hpp"
#include "adept/emotion.hpp"

namespace adept {

enum class Factor {
  FamilSudd,
  NegPosConseq,
  OthSelfCausation,
  LoHiCoPow,
  MoralUnfair,
  Urgency,
  WithFightAct,
};
inline constexpr std::size_t kNumFactors = 7;
inline constexpr std::array<Factor, kNumFactors> kAllFactors = {
    Factor::FamilSudd, Factor::NegPosConseq, Factor::OthSelfCausation, Factor::LoHiCoPow,
    Factor::MoralUnfair, Factor::Urgency,    Factor::WithFightAct};

std::string_view to_string(Factor f);
// Accepts the wire names (Famil_Sudd, ...). Throws PreconditionFailed.
Factor factor_from_string(std::string_view name);

// A cue hit with verbatim byte offsets: text.substr(begin, end - begin) == span.
struct CueMatch {
  Factor factor = Factor::FamilSudd;
  std::string polarity;
  std::string cue;
  std::string span;
  std::size_t begin = 0;
  std::size_t end = 0;
};

class Lexicon {
 public:
  // {"$meta": {...}, factor: {polarity: [cues]}}; every factor must be present.
  static Lexicon from_json(const nlohmann::json& j);
  static const Lexicon& builtin();

  const std::string& version() const { return version_; }
  const std::map<std::string, std::vector<std::string>>& cues(Factor f) const;
  const std::vector<std::string>& interjections() const { return interjections_; }

  // Overlapping hits inside one factor keep the longest, then the earliest.
  std::vector<CueMatch> match(Factor f, std::string_view text) const;
  std::vector<CueMatch> match_interjections(std::string_view text) const;

 private:
  std::string version_;
  std::array<std::map<std::string, std::vector<std::string>>, kNumFactors> cues_;
  std::vector<std::string> interjections_;
};

// Finds whole-token, case-insensitive occurrences of `cue` in `text`.
// Returns [begin, end) byte ranges.
std::vector<std::pair<std::size_t, std::size_t>> find_cue(std::string_view text, std::string_view cue);

struct ProfileCheck {
  Factor factor = Factor::FamilSudd;
  std::string polarity;
};

struct DivergenceCheck {
  Factor factor = Factor::FamilSudd;
  std::map<std::string, Emotion> favors;  // polarity -> emotion it supports
};

class ProfileSet {
 public:
  static ProfileSet from_json(const nlohmann::json& j);
  static const ProfileSet& builtin();

  const std::string& version() const { return version_; }
  const std::vector<ProfileCheck>& verify(Emotion e) const { return verify_[index_of(e)]; }
  // Explicit entry for the unordered pair if one exists, otherwise the
  // factors on which the two verify profiles disagree.
  std::vector<DivergenceCheck> divergence(Emotion a, Emotion b) const;

 private:
  std::string version_;
  std::array<std::vector<ProfileCheck>, kNumEmotions> verify_;
  std::map<std::pair<Emotion, Emotion>, std::vector<DivergenceCheck>> compare_;  // key ordered by index
};

struct SemanticResources {
  const Lexicon* lexicon = &Lexicon::builtin();
  const ProfileSet* profiles = &ProfileSet::builtin();
};

struct SemanticEvidence {
  CueMatch match;
  bool supports = false;  // polarity equals the profile's expected polarity
};

struct VerifyResult {
  Emotion target = Emotion::Neutral;
  std::vector<SemanticEvidence> evidence;
  bool insufficient_evidence = false;
  std::vector<Factor> checked;
};

nlohmann::json to_json(const VerifyResult& r);

// Throws PreconditionFailed on an empty transcript.
VerifyResult verify_semantic_evidence(Emotion target, std::string_view transcript,
                                      const SemanticResources& res = {});

struct FactorVerdict {
  Factor factor = Factor::FamilSudd;
  std::vector<CueMatch> evidence;
  std::optional<Emotion> favors;  // strictly more hits for one side, else none
};

struct CompareResult {
  Emotion e1 = Emotion::Neutral;
  Emotion e2 = Emotion::Neutral;
  std::vector<FactorVerdict> factors;
  std::vector<CueMatch> interjections;
  bool redirect_to_acoustic = false;
  bool insufficient_evidence = false;
};

nlohmann::json to_json(const CompareResult& r);

// Throws PreconditionFailed when e1 == e2 or the transcript is empty.
CompareResult compare_emotions(Emotion e1, Emotion e2, std::string_view transcript,
                               const SemanticResources& res = {});

enum class AlignmentVerdict { Consistent, Conflict, Unknown };
std::string_view to_string(AlignmentVerdict v);

struct AlignmentResult {
  AlignmentVerdict verdict = AlignmentVerdict::Unknown;
  std::string lexical_polarity;  // positive | negative | mixed | none
  bool agitated_prosody = false;
  std::vector<CueMatch> cues;
  std::string rule;
};

nlohmann::json to_json(const AlignmentResult& r);

// Anger, Sadness, Fear, Disgust, Contempt.
EmotionSet negative_family();
// Happiness.
EmotionSet positive_family();

// pitch_velocity at level High, or rms / energy_burstiness Volatile, in any observation.
bool agitated_prosody(const std::vector<AcousticObservation>& observations);

// Conflict when:
//   lexical polarity is positive, prosody is agitated, and either no
//   hypotheses are active or one of them is negative-family; or
//   lexical polarity is negative, prosody is agitated, and a
//   positive-family hypothesis is active.
// Unknown without any polarity cue, Consistent otherwise.
AlignmentResult check_semantic_alignment(const std::vector<AcousticObservation>& observations,
                                         std::string_view transcript, EmotionSet hypotheses = {},
                                         const SemanticResources& res = {});

}  // namespace adept
