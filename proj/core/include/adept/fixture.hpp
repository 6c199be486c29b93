#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adept/labels.hpp"
#include "adept/wav.hpp"

namespace adept {

// Signal recipes shared by the fixture generator, tests and benchmarks.
Audio synth_sine(double freq_hz, double amplitude, double duration_s, int sample_rate = 16000);
Audio synth_sawtooth(double freq_hz, double amplitude, double duration_s, int sample_rate = 16000);
// Quiet tone with a louder stretch of the same tone over [burst_start, burst_end).
Audio synth_burst(double freq_hz, double base_amplitude, double burst_amplitude, double duration_s,
                  double burst_start_s, double burst_end_s, int sample_rate = 16000);

struct FixtureSpec {
  std::size_t n = 50;
  std::uint64_t seed = 7;
  double tie_rate = 0.18;
  // Primary base rates in Emotion index order; normalized on use.
  std::array<double, kNumEmotions> base_rates = {0.12, 0.12, 0.15, 0.08, 0.06, 0.07, 0.10, 0.30};
  // P(|minor| = k) for k = 0..3; normalized on use.
  std::vector<double> minor_count_probs = {0.35, 0.35, 0.2, 0.1};
  double other_vote_rate = 0.05;
  double sarcasm_rate = 0.1;  // share of Anger/Contempt primaries spoken with praise words
  std::size_t speakers = 2;
  double train_fraction = 0.6;
  int sample_rate = 16000;
  bool audio = true;

  static FixtureSpec from_json(const nlohmann::json& j);
};

nlohmann::json to_json(const FixtureSpec& s);

struct WordTruth {
  std::string word;
  double start_s = 0.0;
  double end_s = 0.0;
  double f0_start_hz = 0.0;
  double f0_end_hz = 0.0;
};

struct BurstTruth {
  std::size_t word_index = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  double gain = 1.0;
};

struct UtteranceTruth {
  std::string id;
  std::string speaker;
  EmotionSet primary;
  EmotionSet minor;
  bool sarcastic = false;
  double duration_s = 0.0;
  std::vector<WordTruth> words;
  std::optional<BurstTruth> burst;
  std::vector<Emotion> pool;  // ranked pool the default script proposes
};

nlohmann::json to_json(const UtteranceTruth& t);

struct FixtureUtterance {
  UtteranceRecord record;
  UtteranceTruth truth;
  Audio audio;  // empty when the spec disables audio
};

struct Fixture {
  FixtureSpec spec;
  std::vector<FixtureUtterance> utterances;
  std::size_t train_count = 0;  // the first train_count utterances form the training split
};

Fixture generate_fixture(const FixtureSpec& spec);

// Scripted-policy transcript for one utterance: a legal protocol run whose
// final answer varies across rollouts through seeded choices.
nlohmann::json default_script(const UtteranceTruth& truth);

// Writes manifest.jsonl, train.jsonl, test.jsonl, truth.jsonl, script.json,
// fixture.json and audio/<id>.wav under `dir`. Throws Io.
void write_fixture(const Fixture& fixture, const std::filesystem::path& dir);

}  // namespace adept
