#include "adept/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "adept/error.hpp"

namespace adept {

namespace {

using nlohmann::json;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Portable draws, so fixtures are byte-stable across standard libraries.
double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
std::size_t below(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

std::size_t weighted(std::mt19937_64& rng, const std::vector<double>& w) {
  double total = 0.0;
  for (double x : w) total += x;
  double u = uniform(rng) * total;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    if (u < w[i]) return i;
    u -= w[i];
  }
  for (std::size_t i = w.size(); i-- > 0;) {
    if (w[i] > 0.0) return i;
  }
  return 0;
}

Emotion pick_emotion(std::mt19937_64& rng, const std::array<double, kNumEmotions>& rates, EmotionSet exclude) {
  std::vector<double> w(rates.begin(), rates.end());
  for (Emotion e : exclude.to_vector()) w[index_of(e)] = 0.0;
  return emotion_at(weighted(rng, w));
}

struct Voice {
  double f0;
  double amplitude;
  double word_s;
  bool burst;
};

Voice voice_for(Emotion e) {
  switch (e) {
    case Emotion::Anger: return {230.0, 0.40, 0.24, true};
    case Emotion::Sadness: return {130.0, 0.16, 0.42, false};
    case Emotion::Happiness: return {250.0, 0.32, 0.28, true};
    case Emotion::Surprise: return {270.0, 0.32, 0.30, true};
    case Emotion::Fear: return {240.0, 0.24, 0.26, true};
    case Emotion::Disgust: return {150.0, 0.28, 0.35, false};
    case Emotion::Contempt: return {140.0, 0.26, 0.38, false};
    case Emotion::Neutral: return {170.0, 0.24, 0.32, false};
  }
  return {170.0, 0.24, 0.32, false};
}

const std::array<std::vector<std::string>, kNumEmotions>& phrase_bank() {
  static const std::array<std::vector<std::string>, kNumEmotions> bank = {{
      {"you lied to me and that is not fair", "you should stop cheating right now", "this is wrong and you know it"},
      {"i miss her so much", "it's over and nothing matters anymore", "i can't do this i feel so sad"},
      {"this is wonderful news i love it", "what a great day for all of us", "i am so happy for you"},
      {"wow i can't believe it", "whoa that came out of nowhere", "suddenly everything changed so fast"},
      {"please help me i have to hide", "hurry we have to run now", "i'm scared they will find me"},
      {"that is gross and disgusting", "this food smells nasty", "that is so sick and awful"},
      {"you're pathetic and everyone knows it", "they think they deserve this", "what a shame your work is always like this"},
      {"the meeting starts at ten", "please send the report by friday", "the train leaves from platform two"},
  }};
  return bank;
}

const std::vector<std::string>& sarcastic_phrases() {
  static const std::vector<std::string> p = {"oh great this is just wonderful", "perfect just perfect",
                                             "what a fantastic idea you had"};
  return p;
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

double ramp(double t, double begin, double end, double width) {
  if (t < begin || t >= end) return 0.0;
  const double a = std::min(1.0, (t - begin) / width);
  const double b = std::min(1.0, (end - t) / width);
  const double x = std::min(a, b);
  return 0.5 - 0.5 * std::cos(std::numbers::pi * x);
}

Audio render(const UtteranceTruth& truth, const Voice& v, Emotion primary, int sr, std::mt19937_64& rng) {
  Audio a;
  a.sample_rate = sr;
  const auto n = static_cast<std::size_t>(std::ceil(truth.duration_s * sr));
  a.samples.assign(n, 0.0);
  constexpr double kHarmonicNorm = 1.0 + 1.0 / 2 + 1.0 / 3 + 1.0 / 4 + 1.0 / 5;
  for (const auto& w : truth.words) {
    double phase = 0.0;
    const auto s0 = static_cast<std::size_t>(w.start_s * sr);
    const auto s1 = std::min(n, static_cast<std::size_t>(w.end_s * sr));
    for (std::size_t i = s0; i < s1; ++i) {
      const double t = static_cast<double>(i) / sr;
      const double frac = (t - w.start_s) / (w.end_s - w.start_s);
      double f = w.f0_start_hz + (w.f0_end_hz - w.f0_start_hz) * frac;
      if (primary == Emotion::Fear) f *= 1.0 + 0.03 * std::sin(kTwoPi * 7.0 * t);
      phase += kTwoPi * f / sr;
      double s = 0.0;
      for (int k = 1; k <= 5; ++k) s += std::sin(k * phase) / k;
      double amp = v.amplitude * ramp(t, w.start_s, w.end_s, 0.01);
      if (truth.burst) {
        const double g = ramp(t, truth.burst->start_s, truth.burst->end_s, 0.005);
        amp *= 1.0 + (truth.burst->gain - 1.0) * g;
      }
      a.samples[i] = amp * s / kHarmonicNorm;
    }
  }
  for (auto& x : a.samples) x = std::clamp(x + 0.003 * (uniform(rng) - 0.5), -0.98, 0.98);
  return a;
}

json pool_json(const UtteranceTruth& t) {
  json pool = json::array();
  for (Emotion e : t.pool) {
    const char* conf = t.primary.contains(e) ? "high" : t.minor.contains(e) ? "mid" : "low";
    pool.push_back({{"emotion", to_string(e)}, {"confidence", conf}});
  }
  return pool;
}

json names(const std::vector<Emotion>& v) {
  json out = json::array();
  for (Emotion e : v) out.push_back(to_string(e));
  return out;
}

}  // namespace

Audio synth_sine(double freq_hz, double amplitude, double duration_s, int sr) {
  Audio a;
  a.sample_rate = sr;
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sr));
  a.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) a.samples[i] = amplitude * std::sin(kTwoPi * freq_hz * static_cast<double>(i) / sr);
  return a;
}

Audio synth_sawtooth(double freq_hz, double amplitude, double duration_s, int sr) {
  Audio a;
  a.sample_rate = sr;
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sr));
  a.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = freq_hz * static_cast<double>(i) / sr;
    a.samples[i] = amplitude * (2.0 * (x - std::floor(x)) - 1.0);
  }
  return a;
}

Audio synth_burst(double freq_hz, double base_amplitude, double burst_amplitude, double duration_s,
                  double burst_start_s, double burst_end_s, int sr) {
  Audio a = synth_sine(freq_hz, 1.0, duration_s, sr);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const double t = static_cast<double>(i) / sr;
    a.samples[i] *= (t >= burst_start_s && t < burst_end_s) ? burst_amplitude : base_amplitude;
  }
  return a;
}

FixtureSpec FixtureSpec::from_json(const json& j) {
  FixtureSpec s;
  s.n = j.value("n", s.n);
  s.seed = j.value("seed", s.seed);
  s.tie_rate = j.value("tie_rate", s.tie_rate);
  if (j.contains("base_rates")) {
    const auto& br = j["base_rates"];
    if (br.is_object()) {
      s.base_rates.fill(0.0);
      for (auto it = br.begin(); it != br.end(); ++it) s.base_rates[index_of(canonicalize_emotion(it.key()))] = it.value();
    } else {
      const auto v = br.get<std::vector<double>>();
      if (v.size() != kNumEmotions) throw Error(ErrorCode::PreconditionFailed, "base_rates needs 8 values");
      std::copy(v.begin(), v.end(), s.base_rates.begin());
    }
  }
  if (j.contains("minor_count_probs")) s.minor_count_probs = j["minor_count_probs"].get<std::vector<double>>();
  s.other_vote_rate = j.value("other_vote_rate", s.other_vote_rate);
  s.sarcasm_rate = j.value("sarcasm_rate", s.sarcasm_rate);
  s.speakers = j.value("speakers", s.speakers);
  s.train_fraction = j.value("train_fraction", s.train_fraction);
  s.sample_rate = j.value("sample_rate", s.sample_rate);
  s.audio = j.value("audio", s.audio);
  if (s.tie_rate < 0.0 || s.tie_rate > 1.0) throw Error(ErrorCode::PreconditionFailed, "tie_rate must be in [0,1]");
  if (s.speakers == 0) throw Error(ErrorCode::PreconditionFailed, "speakers must be positive");
  if (s.minor_count_probs.empty()) throw Error(ErrorCode::PreconditionFailed, "minor_count_probs is empty");
  return s;
}

json to_json(const FixtureSpec& s) {
  json rates = json::object();
  for (Emotion e : kAllEmotions) rates[std::string(to_string(e))] = s.base_rates[index_of(e)];
  return {{"n", s.n},
          {"seed", s.seed},
          {"tie_rate", s.tie_rate},
          {"base_rates", rates},
          {"minor_count_probs", s.minor_count_probs},
          {"other_vote_rate", s.other_vote_rate},
          {"sarcasm_rate", s.sarcasm_rate},
          {"speakers", s.speakers},
          {"train_fraction", s.train_fraction},
          {"sample_rate", s.sample_rate},
          {"audio", s.audio}};
}

json to_json(const UtteranceTruth& t) {
  json words = json::array();
  for (const auto& w : t.words) {
    words.push_back({{"w", w.word}, {"s", w.start_s}, {"e", w.end_s}, {"f0_start", w.f0_start_hz}, {"f0_end", w.f0_end_hz}});
  }
  json j = {{"id", t.id},
            {"speaker", t.speaker},
            {"primary", t.primary.names()},
            {"minor", t.minor.names()},
            {"sarcastic", t.sarcastic},
            {"duration_s", t.duration_s},
            {"words", words},
            {"pool", names(t.pool)},
            {"burst", nullptr}};
  if (t.burst) {
    j["burst"] = {{"word_index", t.burst->word_index}, {"start", t.burst->start_s}, {"end", t.burst->end_s}, {"gain", t.burst->gain}};
  }
  return j;
}

Fixture generate_fixture(const FixtureSpec& spec) {
  Fixture fx;
  fx.spec = spec;
  std::mt19937_64 rng(spec.seed);

  // Exactly round(rate * n) ties, placed by a seeded shuffle.
  const auto n_ties = static_cast<std::size_t>(std::llround(spec.tie_rate * static_cast<double>(spec.n)));
  std::vector<std::size_t> order(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) order[i] = i;
  for (std::size_t i = spec.n; i > 1; --i) std::swap(order[i - 1], order[below(rng, i)]);
  std::vector<bool> is_tie(spec.n, false);
  for (std::size_t i = 0; i < n_ties && i < spec.n; ++i) is_tie[order[i]] = true;

  constexpr int kIdWidth = 4;
  for (std::size_t i = 0; i < spec.n; ++i) {
    FixtureUtterance u;
    UtteranceTruth& t = u.truth;
    std::ostringstream id;
    id << "utt";
    id.width(kIdWidth);
    id.fill('0');
    id << i + 1;
    t.id = id.str();
    t.speaker = "spk" + std::to_string(i % spec.speakers);

    const Emotion first = pick_emotion(rng, spec.base_rates, {});
    t.primary.insert(first);
    if (is_tie[i]) t.primary.insert(pick_emotion(rng, spec.base_rates, t.primary));
    const std::size_t want_minor = weighted(rng, spec.minor_count_probs);
    for (std::size_t k = 0; k < want_minor && (t.primary | t.minor).size() < kNumEmotions; ++k) {
      t.minor.insert(pick_emotion(rng, spec.base_rates, t.primary | t.minor));
    }

    std::vector<std::string> votes;
    const int top = is_tie[i] ? 2 + static_cast<int>(below(rng, 2)) : 2 + static_cast<int>(below(rng, 3));
    for (Emotion e : t.primary.to_vector()) {
      for (int v = 0; v < top; ++v) {
        const bool alias = e == Emotion::Happiness && uniform(rng) < 0.05;
        votes.push_back(alias ? "happy" : std::string(to_string(e)));
      }
    }
    for (Emotion e : t.minor.to_vector()) {
      const int count = 1 + static_cast<int>(below(rng, static_cast<std::size_t>(top - 1)));
      for (int v = 0; v < count; ++v) votes.push_back(std::string(to_string(e)));
    }
    if (uniform(rng) < spec.other_vote_rate) votes.push_back("Other");
    for (std::size_t k = votes.size(); k > 1; --k) std::swap(votes[k - 1], votes[below(rng, k)]);

    // Candidate pool for the default script: primaries, minors, one distractor.
    for (Emotion e : t.primary.to_vector()) t.pool.push_back(e);
    for (Emotion e : t.minor.to_vector()) {
      if (t.pool.size() < 4) t.pool.push_back(e);
    }
    if (t.pool.size() < 3) {
      EmotionSet used;
      for (Emotion e : t.pool) used.insert(e);
      std::vector<double> flat(kNumEmotions, 1.0);
      for (Emotion e : used.to_vector()) flat[index_of(e)] = 0.0;
      t.pool.push_back(emotion_at(weighted(rng, flat)));
    }

    const Voice voice = voice_for(first);
    t.sarcastic = (first == Emotion::Anger || first == Emotion::Contempt) && uniform(rng) < spec.sarcasm_rate;
    const auto& bank = t.sarcastic ? sarcastic_phrases() : phrase_bank()[index_of(first)];
    const std::string text = bank[below(rng, bank.size())];
    const double speaker_scale = 1.0 + 0.12 * static_cast<double>(i % spec.speakers);

    double clock = 0.1;
    for (const auto& w : split_words(text)) {
      WordTruth wt;
      wt.word = w;
      const double len_scale = std::clamp(0.6 + 0.08 * static_cast<double>(w.size()), 0.7, 1.4);
      const double dur = voice.word_s * len_scale * (0.85 + 0.3 * uniform(rng));
      wt.start_s = clock;
      wt.end_s = clock + dur;
      const double f0 = voice.f0 * speaker_scale * (1.0 + 0.06 * (uniform(rng) - 0.5));
      wt.f0_start_hz = f0 * 0.97;
      wt.f0_end_hz = f0 * (first == Emotion::Sadness ? 0.9 : 1.03);
      t.words.push_back(wt);
      clock = wt.end_s + 0.06 + 0.1 * uniform(rng);
    }
    if (first == Emotion::Surprise && !t.words.empty()) t.words.back().f0_end_hz *= 1.35;
    t.duration_s = t.words.empty() ? 0.5 : t.words.back().end_s + 0.1;

    if (voice.burst || t.sarcastic) {
      const std::size_t w = below(rng, t.words.size());
      const auto& wt = t.words[w];
      const double dur = wt.end_s - wt.start_s;
      BurstTruth b;
      b.word_index = w;
      b.start_s = wt.start_s + 0.3 * dur;
      b.end_s = b.start_s + std::min(0.12, 0.5 * dur);
      b.gain = (first == Emotion::Anger || t.sarcastic) ? 3.0 : 2.2;
      t.burst = b;
    }

    UtteranceRecord& rec = u.record;
    rec.id = t.id;
    rec.audio = std::filesystem::path("audio") / (t.id + ".wav");
    rec.transcript = text;
    for (const auto& w : t.words) rec.alignment.push_back({w.word, w.start_s, w.end_s});
    rec.votes = {t.id, votes};
    rec.labels = construct_labels(rec.votes);
    rec.speaker = t.speaker;

    if (spec.audio) {
      std::mt19937_64 noise(rng());
      u.audio = render(t, voice, first, spec.sample_rate, noise);
    } else {
      rng();
    }
    fx.utterances.push_back(std::move(u));
  }
  fx.train_count = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(spec.n)));
  return fx;
}

json default_script(const UtteranceTruth& t) {
  const auto& pool = t.pool;
  const std::vector<Emotion> primary = t.primary.to_vector();
  const bool tie = primary.size() >= 2;

  json p1 = {{"candidate_pool", pool_json(t)}, {"reasoning", "Coarse listen: candidates ordered by salience."}};
  if (tie) p1["tie_prediction"] = names({primary[0], primary[1]});

  json p2 = json::array();
  p2.push_back({{"call", "StructuralPriorTool"}, {"args", {{"candidates", names(pool)}, {"intent", "verify"}}}});
  p2.push_back({{"call", "run_semantic_gate"}, {"args", {{"emotion", to_string(pool[0])}}}});
  p2.push_back({{"call", "compare_emotions"}, {"args", {{"e1", to_string(pool[0])}, {"e2", to_string(pool[1])}}}});
  EmotionSet pool_set;
  for (Emotion e : pool) pool_set.insert(e);
  for (const auto& [a, b] : std::vector<std::pair<Emotion, Emotion>>{{Emotion::Happiness, Emotion::Surprise},
                                                                     {Emotion::Contempt, Emotion::Disgust}}) {
    if (pool_set.contains(a) && pool_set.contains(b) && EmotionSet{a, b} != EmotionSet{pool[0], pool[1]}) {
      p2.push_back({{"call", "compare_emotions"}, {"args", {{"e1", to_string(a)}, {"e2", to_string(b)}}}});
    }
  }
  p2.push_back({{"call", "find_acoustic_hotspots"}, {"args", {{"focus_type", "energy_burst"}, {"top_n", 2}}}});
  const std::size_t focus_word = t.burst ? t.burst->word_index : t.words.size() / 2;
  p2.push_back({{"call", "analyze_acoustic_segment"}, {"args", {{"word_indices", {focus_word}}}}});
  if (t.sarcastic) {
    p2.push_back({{"call", "check_semantic_alignment"}, {"args", json::object()}});
    const auto& w = t.words[focus_word];
    p2.push_back({{"branch",
                   {{"when", {{"tool", "check_semantic_alignment"}, {"field", "/verdict"}, {"equals", "Conflict"}}},
                    {"then",
                     {{{"call", "replay_audio"},
                       {"args", {{"reason", "lexical and prosodic cues disagree"}, {"focus_points", {{w.start_s, w.end_s}}}}}}}}}}});
  }
  json decision = {{"final_decision", {{"primary_emotions", t.primary.names()}, {"minor_emotions", t.minor.names()}}},
                   {"reasoning", "Semantic and acoustic observations support the leading candidates."}};
  if (tie) decision["final_decision"]["resolved_tie"] = false;
  p2.push_back({{"choice",
                 {{{{"emit", decision}}},
                  {{{"call", "run_semantic_gate"}, {"args", {{"emotion", to_string(pool[1])}}}}, {{"emit", decision}}}}}});

  const json evidence = {"${obs:run_semantic_gate}", "${obs:analyze_acoustic_segment}"};
  const json right = {{"final_output",
                       {{"primary_emotions", t.primary.names()},
                        {"minor_emotions", t.minor.names()},
                        {"reasoning", "The cited observations agree on the leading candidates."},
                        {"evidence", evidence}}}};
  Emotion alt = pool.back();
  for (auto it = pool.rbegin(); it != pool.rend(); ++it) {
    if (!t.primary.contains(*it)) {
      alt = *it;
      break;
    }
  }
  const json wrong = {{"final_output",
                       {{"primary_emotions", {to_string(alt)}},
                        {"minor_emotions", json::array()},
                        {"reasoning", "Reading the cited observations toward the weaker candidate."},
                        {"evidence", evidence}}}};
  json p3 = {{{"choice", {{{{"emit", right}}}, {{{"emit", right}}}, {{{"emit", right}}}, {{{"emit", wrong}}}}}}};
  return {{"phase1", {{{"emit", p1}}}}, {"phase2", p2}, {"phase3", p3}};
}

void write_fixture(const Fixture& fx, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "audio", ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + (dir / "audio").string() + ": " + ec.message());
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / name).string());
    return out;
  };
  auto all = open("manifest.jsonl");
  auto train = open("train.jsonl");
  auto test = open("test.jsonl");
  auto truth = open("truth.jsonl");
  json scripts = json::object();
  for (std::size_t i = 0; i < fx.utterances.size(); ++i) {
    const auto& u = fx.utterances[i];
    const std::string line = manifest_line_json(u.record).dump();
    all << line << '\n';
    (i < fx.train_count ? train : test) << line << '\n';
    truth << to_json(u.truth).dump() << '\n';
    scripts[u.record.id] = default_script(u.truth);
    if (fx.spec.audio) write_wav(dir / u.record.audio, u.audio);
  }
  auto script = open("script.json");
  script << json{{"utterances", scripts}}.dump(1) << '\n';
  auto spec = open("fixture.json");
  spec << to_json(fx.spec).dump(2) << '\n';
}

}  // namespace adept
