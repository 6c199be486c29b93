#include "adept/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "adept/error.hpp"
#include "adept/hash.hpp"
#include "adept/parallel.hpp"

namespace adept {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
  return out;
}

json read_json(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + p.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::Io, p.string() + " is not valid JSON");
  return j;
}

void write_json(const fs::path& p, const json& j) { open_out(p) << j.dump(2) << '\n'; }

std::vector<json> read_lines(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + p.string());
  std::vector<json> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::Io, p.string() + ":" + std::to_string(n) + ": invalid JSON");
    out.push_back(std::move(j));
  }
  return out;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.insert(0, w - s.size(), ' ');
  return s;
}

std::string num_or_dash(const json& v, const char* f = "%.4f") {
  return v.is_number() ? fmt(f, v.get<double>()) : std::string("-");
}

}  // namespace

std::vector<Trajectory> run_rollouts(const std::vector<UtteranceRecord>& records, const PolicyFactory& factory,
                                     const EngineConfig& config, std::size_t rollouts, std::uint64_t seed,
                                     std::size_t jobs) {
  std::vector<UtteranceInput> inputs(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) { inputs[i] = prepare_utterance(records[i], config.frames); });
  std::vector<Trajectory> out(records.size() * rollouts);
  parallel_for(out.size(), jobs, [&](std::size_t slot) {
    const std::size_t i = slot / rollouts;
    const std::size_t k = slot % rollouts;
    auto policy = factory();
    out[slot] = run_trajectory(inputs[i], *policy, config, seed, k);
  });
  return out;
}

void save_trajectories(const std::vector<Trajectory>& trajectories, const fs::path& path) {
  auto out = open_out(path);
  for (const auto& t : trajectories) out << to_json(t).dump() << '\n';
}

std::vector<Trajectory> load_trajectories(const fs::path& path) {
  std::vector<Trajectory> out;
  for (const auto& j : read_lines(path)) out.push_back(trajectory_from_json(j));
  return out;
}

std::map<std::string, LabelSet> label_map(const std::vector<UtteranceRecord>& records) {
  std::map<std::string, LabelSet> m;
  for (const auto& r : records) m.emplace(r.id, r.labels);
  return m;
}

std::vector<GroupScore> score_trajectories(const std::vector<Trajectory>& trajectories,
                                           const std::map<std::string, LabelSet>& gt, const RewardWeights& w,
                                           std::size_t jobs) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<Trajectory>> groups;
  for (const auto& t : trajectories) {
    auto [it, fresh] = groups.try_emplace(t.utterance_id);
    if (fresh) order.push_back(t.utterance_id);
    it->second.push_back(t);
  }
  std::vector<GroupScore> out(order.size());
  parallel_for(order.size(), jobs, [&](std::size_t i) {
    const auto& id = order[i];
    const auto label = gt.find(id);
    if (label == gt.end()) {
      out[i].utterance_id = id;
      out[i].excluded = groups.at(id).size();
      out[i].notes.push_back("no ground truth for utterance");
      return;
    }
    out[i] = score_group(groups.at(id), label->second, w);
  });
  return out;
}

void save_rewards(const std::vector<GroupScore>& groups, const RewardWeights& w, const fs::path& path) {
  auto out = open_out(path);
  for (const auto& g : groups) {
    json group = to_json(g);
    group.erase("rollouts");
    group["size"] = g.rollouts.size();
    for (const auto& b : g.rollouts) {
      json line = to_json(b);
      line["weights"] = w.name;
      line["group"] = group;
      out << line.dump() << '\n';
    }
  }
}

std::string render_report(const json& r, const std::vector<json>& rewards) {
  std::ostringstream o;
  o << "Evaluation (" << r.value("pairs", 0) << " pairs";
  if (r.value("excluded", 0) > 0) o << ", " << r.value("excluded", 0) << " excluded";
  o << ")\n\n";
  const char* cols[] = {"Avg Size", "P-MacroF1", "Soft R", "Set R", "Jaccard"};
  const char* keys[] = {"avg_size", "p_macro_f1", "soft_recall", "set_recall", "jaccard"};
  for (const char* c : cols) o << pad(c, 11);
  o << '\n';
  for (const char* k : keys) o << pad(num_or_dash(r.value(k, json())), 11);
  o << "\n\nPer class\n" << pad("class", 10) << pad("TP", 6) << pad("FP", 6) << pad("FN", 6) << pad("F1", 9) << '\n';
  for (const auto& c : r.value("per_class", json::array())) {
    o << pad(c.value("emotion", ""), 10) << pad(std::to_string(c.value("tp", 0)), 6) << pad(std::to_string(c.value("fp", 0)), 6)
      << pad(std::to_string(c.value("fn", 0)), 6) << pad(num_or_dash(c.value("f1", json())), 9) << '\n';
  }
  o << "\nTool calls by consensus level\n";
  const json buckets = r.value("tool_usage", json::object()).value("by_consensus", json::object());
  for (const char* level : {"High", "Medium", "Low"}) {
    o << pad(level, 8) << "  ";
    const json b = buckets.value(level, json::object());
    if (b.value("absent", false) || b.empty()) {
      o << "absent\n";
      continue;
    }
    o << "mean " << fmt("%.2f", b.value("mean_calls", 0.0)) << " over " << b.value("trajectories", 0) << " trajectories\n";
  }
  if (!rewards.empty()) {
    double comp = 0.0, gate = 0.0;
    std::size_t correct = 0, gated = 0;
    for (const auto& l : rewards) {
      comp += l.value("composite", 0.0);
      gate += l.value("gate", 1.0);
      correct += l.value("correct", false) ? 1 : 0;
      gated += l.value("gate", 1.0) < 1.0 ? 1 : 0;
    }
    const double n = static_cast<double>(rewards.size());
    o << "\nRewards (" << rewards.size() << " rollouts)\n"
      << "  mean composite " << fmt("%.4f", comp / n) << "\n"
      << "  mean gate      " << fmt("%.4f", gate / n) << "\n"
      << "  correct        " << correct << "\n"
      << "  gated rollouts " << gated << "\n";
  }
  const auto notes = r.value("notes", json::array());
  if (!notes.empty()) {
    o << "\nNotes\n";
    for (const auto& n : notes) o << "  " << n.get<std::string>() << '\n';
  }
  return o.str();
}

json figure_data(const json& r) {
  const json buckets = r.value("tool_usage", json::object()).value("by_consensus", json::object());
  std::vector<std::string> tools;
  for (const auto& t : tool_registry()) tools.push_back(t.name);
  json levels = json::array(), means = json::array(), calls = json::array(), hist = json::array();
  for (const char* level : {"High", "Medium", "Low"}) {
    levels.push_back(level);
    const json b = buckets.value(level, json::object());
    means.push_back(b.contains("mean_calls") ? b["mean_calls"] : json(nullptr));
    calls.push_back(b.value("calls", json::array()));
    json row = json::array();
    const json h = b.value("tool_histogram", json::object());
    for (const auto& t : tools) row.push_back(h.value(t, 0));
    hist.push_back(row);
  }
  return {{"consensus_levels", levels}, {"mean_calls", means}, {"calls", calls}, {"tool_names", tools}, {"tool_histograms", hist}};
}

PolicySpec PolicySpec::parse(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::PreconditionFailed, "policy spec needs scripted:<file> or remote:<url>");
  PolicySpec p;
  const std::string kind = spec.substr(0, colon);
  p.target = spec.substr(colon + 1);
  if (kind == "scripted") p.kind = Kind::Scripted;
  else if (kind == "remote") p.kind = Kind::Remote;
  else throw Error(ErrorCode::PreconditionFailed, "unknown policy kind '" + kind + "'");
  if (p.target.empty()) throw Error(ErrorCode::PreconditionFailed, "policy spec has an empty target");
  return p;
}

PolicyFactory make_policy_factory(const PolicySpec& spec, const RemoteConfig& remote_defaults) {
  if (spec.kind == PolicySpec::Kind::Scripted) {
    auto script = std::make_shared<const json>(read_json(spec.target));
    return scripted_policy(script, "scripted:" + fs::path(spec.target).filename().string());
  }
  RemoteConfig rc = remote_defaults;
  rc.url = spec.target;
  rc.model = spec.model;
  return remote_policy(rc);
}

namespace {

class StageBook {
 public:
  StageBook(fs::path path, bool resume) : path_(std::move(path)), resume_(resume) {
    if (fs::exists(path_)) book_ = read_json(path_);
    if (!book_.is_object()) book_ = json::object();
  }

  static json hashes(const std::vector<fs::path>& files) {
    json h = json::object();
    for (const auto& f : files) h[f.filename().string()] = sha256_file(f);
    return h;
  }

  bool fresh(const std::string& stage, const json& inputs, const json& params, const std::vector<fs::path>& outputs) const {
    if (!resume_ || !book_.contains(stage)) return false;
    const auto& rec = book_[stage];
    if (rec.value("inputs", json()) != inputs || rec.value("params", json()) != params) return false;
    for (const auto& o : outputs) {
      if (!fs::exists(o)) return false;
    }
    return rec.value("outputs", json()) == hashes(outputs);
  }

  void record(const std::string& stage, const json& inputs, const json& params, const std::vector<fs::path>& outputs) {
    book_[stage] = {{"inputs", inputs}, {"params", params}, {"outputs", hashes(outputs)}};
    write_json(path_, book_);
  }

 private:
  fs::path path_;
  bool resume_;
  json book_;
};

std::vector<UtteranceRecord> load_records(const fs::path& manifest, const std::function<void(const std::string&)>& log) {
  auto load = load_manifest(manifest);
  for (const auto& issue : load.issues) {
    if (log) log(manifest.string() + ":" + std::to_string(issue.line) + ": " + issue.message);
  }
  return std::move(load.records);
}

}  // namespace

std::vector<StageOutcome> run_pipeline(const PipelineConfig& c, const std::function<void(const std::string&)>& log) {
  const fs::path out = c.out_dir;
  fs::create_directories(out);
  StageBook book(out / "stages.json", c.resume);
  std::vector<StageOutcome> outcomes;

  const fs::path labels = out / "labels.jsonl", stats = out / "stats.json", prior = out / "prior.json",
                 refs = out / "refs.json", traj = out / "traj" / "trajectories.jsonl", run_info = out / "traj" / "run.json",
                 rewards = out / "rewards.jsonl", report = out / "report.json", report_txt = out / "report.txt",
                 figures = out / "figures.json";
  std::vector<fs::path> policy_inputs;
  if (c.policy.kind == PolicySpec::Kind::Scripted) policy_inputs.push_back(c.policy.target);
  const bool weights_file = c.weights != "A" && c.weights != "B" && c.weights != "C";

  auto stage = [&](const std::string& name, std::vector<fs::path> inputs, const json& params,
                   const std::vector<fs::path>& outputs, const std::function<void()>& body) {
    try {
      const json in_hash = StageBook::hashes(inputs);
      if (book.fresh(name, in_hash, params, outputs)) {
        if (log) log("stage " + name + ": fresh, skipped");
        outcomes.push_back({name, false});
        return;
      }
      if (log) log("stage " + name + ": running");
      body();
      book.record(name, in_hash, params, outputs);
      outcomes.push_back({name, true});
    } catch (const Error& e) {
      throw Error(e.code(), "stage " + name + " failed: " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::PreconditionFailed, "stage " + name + " failed: " + e.what());
    }
  };

  stage("labels", {c.eval_manifest}, json::object(), {labels, stats}, [&] {
    const auto records = load_records(c.eval_manifest, log);
    auto o = open_out(labels);
    for (const auto& r : records) o << json{{"id", r.id}, {"labels", to_json(r.labels)}}.dump() << '\n';
    o.close();
    write_json(stats, records.empty() ? json{{"n", 0}} : to_json(corpus_stats(records)));
  });

  stage("prior", {c.train_manifest}, {{"lambda", c.lambda}}, {prior}, [&] {
    const auto records = load_records(c.train_manifest, log);
    PriorTable t = build_prior(accumulate(records), c.lambda);
    t.source_fingerprint = sha256_file(c.train_manifest);
    t.source_records = records.size();
    save_prior(t, prior);
  });

  stage("refstats", {c.train_manifest}, {{"scope", to_string(c.scope)}}, {refs}, [&] {
    const auto records = load_records(c.train_manifest, log);
    const FrameParams frames;
    GlobalReference ref = build_reference(summarize_records(records, frames, c.jobs), c.scope);
    ref.manifest_fingerprint = sha256_file(c.train_manifest);
    ref.frame_fingerprint = frames.fingerprint();
    save_reference(ref, refs);
  });

  std::vector<fs::path> run_inputs = {c.eval_manifest, prior, refs};
  run_inputs.insert(run_inputs.end(), policy_inputs.begin(), policy_inputs.end());
  const json run_params = {{"policy", c.policy.kind == PolicySpec::Kind::Scripted ? "scripted" : "remote:" + c.policy.target},
                           {"model", c.policy.model},
                           {"rollouts", c.rollouts},
                           {"seed", c.seed},
                           {"max_calls", c.max_calls},
                           {"audio_context", c.audio_context == AudioContext::Descriptor ? "descriptor" : "features"}};
  stage("run", run_inputs, run_params, {traj, run_info}, [&] {
    const auto records = load_records(c.eval_manifest, log);
    const PriorTable table = load_prior(prior);
    const auto loaded = load_reference(refs);
    if (loaded.fingerprint_mismatch && log) log("warning: reference frame fingerprint differs from current parameters");
    EngineConfig cfg;
    cfg.prior = &table;
    cfg.reference = &loaded.reference;
    cfg.reference_fingerprint_mismatch = loaded.fingerprint_mismatch;
    cfg.max_calls = c.max_calls;
    cfg.audio_context = c.audio_context;
    const auto trajectories = run_rollouts(records, make_policy_factory(c.policy, c.remote), cfg, c.rollouts, c.seed, c.jobs);
    save_trajectories(trajectories, traj);
    std::size_t unavailable = 0;
    for (const auto& t : trajectories) unavailable += t.status == "backend_unavailable" ? 1 : 0;
    write_json(run_info, {{"utterances", records.size()},
                          {"rollouts", c.rollouts},
                          {"trajectories", trajectories.size()},
                          {"backend_unavailable", unavailable},
                          {"params", run_params}});
  });

  std::vector<fs::path> score_inputs = {traj, c.eval_manifest};
  if (weights_file) score_inputs.push_back(c.weights);
  stage("score", score_inputs, {{"weights", weights_file ? "file" : c.weights}}, {rewards}, [&] {
    const RewardWeights w = weights_file ? RewardWeights::from_json(read_json(c.weights)) : RewardWeights::preset(c.weights);
    const auto gt = label_map(load_records(c.eval_manifest, log));
    save_rewards(score_trajectories(load_trajectories(traj), gt, w, c.jobs), w, rewards);
  });

  stage("eval", {traj, c.eval_manifest}, json::object(), {report}, [&] {
    const auto gt = label_map(load_records(c.eval_manifest, log));
    write_json(report, to_json(evaluate(load_trajectories(traj), gt)));
  });

  stage("report", {report, rewards}, json::object(), {report_txt, figures}, [&] {
    const json r = read_json(report);
    open_out(report_txt) << render_report(r, read_lines(rewards));
    write_json(figures, figure_data(r));
  });

  return outcomes;
}

}  // namespace adept
