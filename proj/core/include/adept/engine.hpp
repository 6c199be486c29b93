#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include "adept/acoustic.hpp"
#include "adept/labels.hpp"
#include "adept/policy.hpp"
#include "adept/prior.hpp"
#include "adept/refstats.hpp"
#include "adept/semantic.hpp"
#include "adept/trajectory.hpp"

namespace adept {

struct PromptPack {
  std::string phase1;
  std::string phase2;
  std::string phase3;

  const std::string& for_phase(Phase p) const;
  static PromptPack builtin();
  // Reads phase1.txt, phase2.txt, phase3.txt from `dir`; throws Io.
  static PromptPack from_dir(const std::filesystem::path& dir);
};

enum class AudioContext { Descriptor, FeatureSummary };

struct EngineConfig {
  const PriorTable* prior = nullptr;
  const GlobalReference* reference = nullptr;
  bool reference_fingerprint_mismatch = false;
  std::size_t max_calls = 12;
  // Re-asks after an illegal tool call in phases 1 and 3.
  std::size_t max_reasks = 2;
  AudioContext audio_context = AudioContext::Descriptor;
  PromptPack prompts = PromptPack::builtin();
  SemanticResources semantic;
  HotspotParams hotspots;
  FrameParams frames;
  const AliasTable* aliases = nullptr;  // defaults to default_aliases()
  // Observer for every policy step; used to audit what each phase could see.
  std::function<void(const PolicyContext&)> on_context;
};

// Audio features are computed once per utterance and shared by its rollouts.
struct UtteranceInput {
  const UtteranceRecord* record = nullptr;
  std::shared_ptr<const UtteranceAcoustics> acoustics;
  std::string audio_error;
};

// Loads and frames the audio; failures are kept in audio_error, not thrown.
UtteranceInput prepare_utterance(const UtteranceRecord& record, const FrameParams& frames = {});

std::uint64_t rollout_seed(std::uint64_t base_seed, const std::string& utterance_id, std::size_t rollout);

// Runs the three phases. Throws PreconditionFailed without a prior table or
// record; every policy misstep ends up in the trajectory instead.
Trajectory run_trajectory(const UtteranceInput& input, Policy& policy, const EngineConfig& config,
                          std::uint64_t seed, std::size_t rollout = 0);

}  // namespace adept
