#include "adept/semantic.hpp"

#include <algorithm>
#include <cctype>

#include <nlohmann/json.hpp>

#include "adept/assets.hpp"
#include "adept/error.hpp"

namespace adept {

namespace {

bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || c == '\'' || u >= 0x80;
}

struct Token {
  std::size_t begin;
  std::size_t end;
  std::string lower;
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_char(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    std::string lower;
    while (j < text.size() && is_word_char(text[j])) {
      lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[j]))));
      ++j;
    }
    out.push_back({i, j, std::move(lower)});
    i = j;
  }
  return out;
}

std::string factor_key(Factor f) { return std::string(to_string(f)); }

}  // namespace

std::string_view to_string(Factor f) {
  switch (f) {
    case Factor::FamilSudd: return "Famil_Sudd";
    case Factor::NegPosConseq: return "Neg_PosConseq";
    case Factor::OthSelfCausation: return "OthSelf_Causation";
    case Factor::LoHiCoPow: return "LoHi_CoPow";
    case Factor::MoralUnfair: return "Moral_Unfair";
    case Factor::Urgency: return "Urgency";
    case Factor::WithFightAct: return "With_FightAct";
  }
  return "Famil_Sudd";
}

Factor factor_from_string(std::string_view name) {
  for (Factor f : kAllFactors) {
    if (to_string(f) == name) return f;
  }
  throw Error(ErrorCode::PreconditionFailed, "unknown appraisal factor '" + std::string(name) + "'");
}

std::vector<std::pair<std::size_t, std::size_t>> find_cue(std::string_view text, std::string_view cue) {
  std::vector<std::pair<std::size_t, std::size_t>> hits;
  bool need_question = false;
  std::string_view body = cue;
  while (!body.empty() && std::isspace(static_cast<unsigned char>(body.back()))) body.remove_suffix(1);
  if (!body.empty() && body.back() == '?') {
    need_question = true;
    body.remove_suffix(1);
  }
  const auto want = tokenize(body);
  if (want.empty()) return hits;
  const auto have = tokenize(text);
  for (std::size_t i = 0; i + want.size() <= have.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < want.size() && ok; ++k) ok = have[i + k].lower == want[k].lower;
    if (!ok) continue;
    std::size_t end = have[i + want.size() - 1].end;
    if (need_question) {
      if (end >= text.size() || text[end] != '?') continue;
      ++end;
    }
    hits.emplace_back(have[i].begin, end);
  }
  return hits;
}

Lexicon Lexicon::from_json(const nlohmann::json& j) {
  Lexicon lex;
  if (j.contains("$meta")) {
    const auto& meta = j["$meta"];
    lex.version_ = meta.value("version", "");
    if (meta.contains("polysemous_interjections")) {
      lex.interjections_ = meta["polysemous_interjections"].get<std::vector<std::string>>();
    }
  }
  for (const auto& [key, value] : j.items()) {
    if (!key.empty() && key[0] == '$') continue;
    const Factor f = factor_from_string(key);
    for (const auto& [polarity, cues] : value.items()) {
      lex.cues_[static_cast<std::size_t>(f)][polarity] = cues.get<std::vector<std::string>>();
    }
  }
  for (Factor f : kAllFactors) {
    if (lex.cues_[static_cast<std::size_t>(f)].empty()) {
      throw Error(ErrorCode::PreconditionFailed, "lexicon has no cues for factor " + factor_key(f));
    }
  }
  return lex;
}

const Lexicon& Lexicon::builtin() {
  static const Lexicon lex = from_json(nlohmann::json::parse(builtin_asset("lexicon.json")));
  return lex;
}

const std::map<std::string, std::vector<std::string>>& Lexicon::cues(Factor f) const {
  return cues_[static_cast<std::size_t>(f)];
}

std::vector<CueMatch> Lexicon::match(Factor f, std::string_view text) const {
  std::vector<CueMatch> all;
  for (const auto& [polarity, cues] : cues(f)) {
    for (const auto& cue : cues) {
      for (const auto& [b, e] : find_cue(text, cue)) {
        all.push_back({f, polarity, cue, std::string(text.substr(b, e - b)), b, e});
      }
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const CueMatch& x, const CueMatch& y) {
    const std::size_t lx = x.end - x.begin, ly = y.end - y.begin;
    if (lx != ly) return lx > ly;
    return x.begin < y.begin;
  });
  std::vector<CueMatch> kept;
  for (auto& m : all) {
    const bool overlaps = std::any_of(kept.begin(), kept.end(), [&](const CueMatch& k) {
      return m.begin < k.end && k.begin < m.end;
    });
    if (!overlaps) kept.push_back(std::move(m));
  }
  std::sort(kept.begin(), kept.end(), [](const CueMatch& x, const CueMatch& y) { return x.begin < y.begin; });
  return kept;
}

std::vector<CueMatch> Lexicon::match_interjections(std::string_view text) const {
  std::vector<CueMatch> out;
  for (const auto& cue : interjections_) {
    for (const auto& [b, e] : find_cue(text, cue)) {
      out.push_back({Factor::FamilSudd, "interjection", cue, std::string(text.substr(b, e - b)), b, e});
    }
  }
  std::sort(out.begin(), out.end(), [](const CueMatch& x, const CueMatch& y) {
    return x.begin != y.begin ? x.begin < y.begin : x.end > y.end;
  });
  return out;
}

ProfileSet ProfileSet::from_json(const nlohmann::json& j) {
  ProfileSet ps;
  if (j.contains("$meta")) ps.version_ = j["$meta"].value("version", "");
  for (const auto& [key, value] : j.items()) {
    if (!key.empty() && key[0] == '$') continue;
    const Emotion e = canonicalize_emotion(key, AliasTable::canonical_only());
    for (const auto& check : value.value("verify", nlohmann::json::array())) {
      ps.verify_[index_of(e)].push_back({factor_from_string(check.at("factor").get<std::string>()),
                                         check.at("polarity").get<std::string>()});
    }
    const nlohmann::json compare = value.value("compare", nlohmann::json::object());
    for (const auto& [other_name, checks] : compare.items()) {
      const Emotion other = canonicalize_emotion(other_name, AliasTable::canonical_only());
      if (other == e) throw Error(ErrorCode::PreconditionFailed, "profile compares " + key + " with itself");
      auto pair_key = index_of(e) < index_of(other) ? std::make_pair(e, other) : std::make_pair(other, e);
      if (ps.compare_.count(pair_key)) {
        throw Error(ErrorCode::PreconditionFailed, "duplicate compare entry for " + key + "/" + other_name);
      }
      std::vector<DivergenceCheck> list;
      for (const auto& c : checks) {
        DivergenceCheck d;
        d.factor = factor_from_string(c.at("factor").get<std::string>());
        for (const auto& [pol, em] : c.at("favors").items()) {
          const Emotion fav = canonicalize_emotion(em.get<std::string>(), AliasTable::canonical_only());
          if (fav != e && fav != other) {
            throw Error(ErrorCode::PreconditionFailed, "compare entry " + key + "/" + other_name + " favors " +
                                                           em.get<std::string>());
          }
          d.favors[pol] = fav;
        }
        list.push_back(std::move(d));
      }
      ps.compare_[pair_key] = std::move(list);
    }
  }
  return ps;
}

const ProfileSet& ProfileSet::builtin() {
  static const ProfileSet ps = from_json(nlohmann::json::parse(builtin_asset("profiles.json")));
  return ps;
}

std::vector<DivergenceCheck> ProfileSet::divergence(Emotion a, Emotion b) const {
  const auto key = index_of(a) < index_of(b) ? std::make_pair(a, b) : std::make_pair(b, a);
  if (auto it = compare_.find(key); it != compare_.end()) return it->second;
  std::vector<DivergenceCheck> out;
  auto expected = [&](Emotion e, Factor f) -> std::optional<std::string> {
    for (const auto& c : verify(e)) {
      if (c.factor == f) return c.polarity;
    }
    return std::nullopt;
  };
  for (Factor f : kAllFactors) {
    const auto pa = expected(key.first, f);
    const auto pb = expected(key.second, f);
    if (pa == pb) continue;
    DivergenceCheck d;
    d.factor = f;
    if (pa) d.favors[*pa] = key.first;
    if (pb) d.favors[*pb] = key.second;
    out.push_back(std::move(d));
  }
  return out;
}

namespace {

nlohmann::json match_json(const CueMatch& m) {
  return {{"factor", to_string(m.factor)}, {"polarity", m.polarity}, {"cue", m.cue},
          {"span", m.span},                {"start", m.begin},       {"end", m.end}};
}

void require_text(std::string_view transcript) {
  if (transcript.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw Error(ErrorCode::PreconditionFailed, "semantic tools need a non-empty transcript");
  }
}

}  // namespace

nlohmann::json to_json(const VerifyResult& r) {
  nlohmann::json ev = nlohmann::json::array();
  for (const auto& e : r.evidence) {
    auto j = match_json(e.match);
    j["supports"] = e.supports;
    ev.push_back(std::move(j));
  }
  nlohmann::json checked = nlohmann::json::array();
  for (Factor f : r.checked) checked.push_back(to_string(f));
  nlohmann::json j = {{"target_emotion", to_string(r.target)}, {"checked_factors", checked}};
  if (r.insufficient_evidence) {
    j["result"] = "insufficient_evidence";
    j["evidence"] = nullptr;
  } else {
    j["result"] = "evidence";
    j["evidence"] = ev;
  }
  return j;
}

VerifyResult verify_semantic_evidence(Emotion target, std::string_view transcript, const SemanticResources& res) {
  require_text(transcript);
  VerifyResult r;
  r.target = target;
  for (const auto& check : res.profiles->verify(target)) {
    r.checked.push_back(check.factor);
    for (auto& m : res.lexicon->match(check.factor, transcript)) {
      const bool supports = m.polarity == check.polarity;
      r.evidence.push_back({std::move(m), supports});
    }
  }
  r.insufficient_evidence = r.evidence.empty();
  return r;
}

nlohmann::json to_json(const CompareResult& r) {
  nlohmann::json factors = nlohmann::json::array();
  for (const auto& f : r.factors) {
    nlohmann::json ev = nlohmann::json::array();
    for (const auto& m : f.evidence) ev.push_back(match_json(m));
    factors.push_back({{"factor", to_string(f.factor)},
                       {"evidence", ev},
                       {"favors", f.favors ? nlohmann::json(to_string(*f.favors)) : nlohmann::json(nullptr)}});
  }
  nlohmann::json inter = nlohmann::json::array();
  for (const auto& m : r.interjections) inter.push_back({{"cue", m.cue}, {"span", m.span}, {"start", m.begin}, {"end", m.end}});
  return {{"pair", {to_string(r.e1), to_string(r.e2)}},
          {"divergence", factors},
          {"interjections", inter},
          {"redirect_to_acoustic", r.redirect_to_acoustic},
          {"insufficient_evidence", r.insufficient_evidence}};
}

CompareResult compare_emotions(Emotion e1, Emotion e2, std::string_view transcript, const SemanticResources& res) {
  if (e1 == e2) throw Error(ErrorCode::PreconditionFailed, "compare_emotions needs two different emotions");
  require_text(transcript);
  CompareResult r;
  r.e1 = e1;
  r.e2 = e2;
  bool any = false;
  for (const auto& check : res.profiles->divergence(e1, e2)) {
    FactorVerdict v;
    v.factor = check.factor;
    std::size_t for1 = 0, for2 = 0;
    for (auto& m : res.lexicon->match(check.factor, transcript)) {
      auto it = check.favors.find(m.polarity);
      if (it == check.favors.end()) continue;
      (it->second == e1 ? for1 : for2) += 1;
      v.evidence.push_back(std::move(m));
    }
    if (for1 > for2) v.favors = e1;
    if (for2 > for1) v.favors = e2;
    any = any || !v.evidence.empty();
    r.factors.push_back(std::move(v));
  }
  r.interjections = res.lexicon->match_interjections(transcript);
  r.redirect_to_acoustic = !r.interjections.empty();
  r.insufficient_evidence = !any;
  return r;
}

std::string_view to_string(AlignmentVerdict v) {
  switch (v) {
    case AlignmentVerdict::Consistent: return "Consistent";
    case AlignmentVerdict::Conflict: return "Conflict";
    case AlignmentVerdict::Unknown: return "Unknown";
  }
  return "Unknown";
}

nlohmann::json to_json(const AlignmentResult& r) {
  nlohmann::json cues = nlohmann::json::array();
  for (const auto& m : r.cues) cues.push_back(match_json(m));
  return {{"verdict", to_string(r.verdict)},
          {"lexical_polarity", r.lexical_polarity},
          {"agitated_prosody", r.agitated_prosody},
          {"cues", cues},
          {"rule", r.rule}};
}

EmotionSet negative_family() {
  return {Emotion::Anger, Emotion::Sadness, Emotion::Fear, Emotion::Disgust, Emotion::Contempt};
}

EmotionSet positive_family() { return {Emotion::Happiness}; }

bool agitated_prosody(const std::vector<AcousticObservation>& observations) {
  for (const auto& obs : observations) {
    for (const auto& m : obs.metrics) {
      if (m.metric == Metric::PitchVelocity && m.level == LevelBin::High) return true;
      if ((m.metric == Metric::Rms || m.metric == Metric::EnergyBurstiness) && m.volatility &&
          *m.volatility == VolatilityBin::Volatile) {
        return true;
      }
    }
  }
  return false;
}

AlignmentResult check_semantic_alignment(const std::vector<AcousticObservation>& observations,
                                         std::string_view transcript, EmotionSet hypotheses,
                                         const SemanticResources& res) {
  require_text(transcript);
  AlignmentResult r;
  r.cues = res.lexicon->match(Factor::NegPosConseq, transcript);
  std::size_t pos = 0, neg = 0;
  for (const auto& m : r.cues) {
    if (m.polarity == "positive") ++pos;
    if (m.polarity == "negative") ++neg;
  }
  r.agitated_prosody = agitated_prosody(observations);
  if (pos == 0 && neg == 0) {
    r.lexical_polarity = "none";
    r.verdict = AlignmentVerdict::Unknown;
    r.rule = "no valence cue in transcript";
    return r;
  }
  r.lexical_polarity = pos > neg ? "positive" : neg > pos ? "negative" : "mixed";
  r.verdict = AlignmentVerdict::Consistent;
  r.rule = "no conflict trigger";
  if (!r.agitated_prosody) return r;
  if (r.lexical_polarity == "positive" && (hypotheses.empty() || hypotheses.intersects(negative_family()))) {
    r.verdict = AlignmentVerdict::Conflict;
    r.rule = "positive lexical valence with agitated prosody";
  } else if (r.lexical_polarity == "negative" && hypotheses.intersects(positive_family())) {
    r.verdict = AlignmentVerdict::Conflict;
    r.rule = "negative lexical valence with agitated prosody under a positive hypothesis";
  }
  return r;
}

}  // namespace adept
