#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adept/engine.hpp"
#include "adept/metrics.hpp"
#include "adept/reward.hpp"

namespace adept {

// Trajectories in (record order, rollout) order regardless of `jobs`.
std::vector<Trajectory> run_rollouts(const std::vector<UtteranceRecord>& records, const PolicyFactory& factory,
                                     const EngineConfig& config, std::size_t rollouts, std::uint64_t seed,
                                     std::size_t jobs = 1);

// One trajectory per line.
void save_trajectories(const std::vector<Trajectory>& trajectories, const std::filesystem::path& path);
std::vector<Trajectory> load_trajectories(const std::filesystem::path& path);

// Groups by utterance in first-seen order.
std::vector<GroupScore> score_trajectories(const std::vector<Trajectory>& trajectories,
                                           const std::map<std::string, LabelSet>& gt, const RewardWeights& w,
                                           std::size_t jobs = 1);
// One line per rollout, carrying its group's gate statistics.
void save_rewards(const std::vector<GroupScore>& groups, const RewardWeights& w, const std::filesystem::path& path);

std::map<std::string, LabelSet> label_map(const std::vector<UtteranceRecord>& records);

// Table-style text summary of an eval report plus optional reward lines.
std::string render_report(const nlohmann::json& eval_report, const std::vector<nlohmann::json>& reward_lines);
// Per-consensus call counts and tool histograms as plain arrays for plotting.
nlohmann::json figure_data(const nlohmann::json& eval_report);

struct PolicySpec {
  enum class Kind { Scripted, Remote };
  Kind kind = Kind::Scripted;
  std::string target;  // script path or endpoint url
  std::string model = "default";

  // "scripted:<path>" or "remote:<url>".
  static PolicySpec parse(const std::string& spec);
};

PolicyFactory make_policy_factory(const PolicySpec& spec, const RemoteConfig& remote_defaults = {});

struct PipelineConfig {
  std::filesystem::path train_manifest;
  std::filesystem::path eval_manifest;
  std::filesystem::path out_dir;
  PolicySpec policy;
  RemoteConfig remote;
  std::size_t rollouts = 4;
  std::uint64_t seed = 7;
  std::string weights = "B";  // preset name or JSON file path
  double lambda = 0.5;
  ReferenceScope scope = ReferenceScope::Corpus;
  std::size_t max_calls = 12;
  AudioContext audio_context = AudioContext::Descriptor;
  std::size_t jobs = 1;
  bool resume = false;
};

struct StageOutcome {
  std::string stage;
  bool ran = false;  // false when skipped as fresh
};

// labels -> prior -> refstats -> run -> score -> eval -> report. Each stage
// records input and output hashes in stages.json; with `resume`, stages whose
// inputs, parameters and outputs are unchanged are skipped. A failing stage
// throws Error naming the stage; outputs of earlier stages stay on disk.
std::vector<StageOutcome> run_pipeline(const PipelineConfig& config,
                                       const std::function<void(const std::string&)>& log = {});

}  // namespace adept
