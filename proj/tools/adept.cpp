#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "adept/error.hpp"
#include "adept/fixture.hpp"
#include "adept/hash.hpp"
#include "adept/pipeline.hpp"
#include "adept/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace adept;

namespace {

json read_json_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + p.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::Io, p.string() + " is not valid JSON");
  return j;
}

std::vector<json> read_json_lines(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + p.string());
  std::vector<json> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

void write_text(const fs::path& p, const std::string& s) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
  out << s;
}

fs::path trajectory_file(const fs::path& p) { return fs::is_directory(p) ? p / "trajectories.jsonl" : p; }

void warn(const std::string& msg) { std::cerr << "adept: warning: " << msg << '\n'; }

std::vector<UtteranceRecord> records_of(const fs::path& manifest, bool strict = false) {
  ManifestOptions opt;
  opt.strict = strict;
  auto load = load_manifest(manifest, opt);
  for (const auto& i : load.issues) warn(manifest.string() + ":" + std::to_string(i.line) + ": " + i.message);
  return std::move(load.records);
}

RewardWeights weights_of(const std::string& spec) {
  if (spec == "A" || spec == "B" || spec == "C") return RewardWeights::preset(spec);
  return RewardWeights::from_json(read_json_file(spec));
}

AudioContext audio_context_of(const std::string& s) {
  if (s == "descriptor") return AudioContext::Descriptor;
  if (s == "features") return AudioContext::FeatureSummary;
  throw Error(ErrorCode::PreconditionFailed, "audio context must be descriptor or features");
}

ReferenceScope scope_of(const std::string& s) {
  if (s == "corpus") return ReferenceScope::Corpus;
  if (s == "speaker") return ReferenceScope::Speaker;
  throw Error(ErrorCode::PreconditionFailed, "scope must be corpus or speaker");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adept: label construction, evidence tools, three-phase rollouts, rewards and evaluation"};
  app.set_version_flag("--version", std::string(kVersion));
  app.set_config("--config", "", "TOML/INI file supplying option values (command-line values take precedence)");
  app.require_subcommand(1);
  std::function<void()> action;

  // fixture
  auto* fx = app.add_subcommand("fixture", "Generate a synthetic corpus with audio and a truth sidecar");
  fs::path fx_out, fx_spec;
  FixtureSpec spec;
  bool fx_no_audio = false;
  fx->add_option("--out", fx_out, "Output directory")->required();
  fx->add_option("--spec", fx_spec, "JSON fixture spec; flags below override it");
  auto* fx_n = fx->add_option("--n", spec.n, "Number of utterances");
  auto* fx_seed = fx->add_option("--seed", spec.seed, "Generator seed");
  auto* fx_tie = fx->add_option("--tie-rate", spec.tie_rate, "Target tie rate")->check(CLI::Range(0.0, 1.0));
  auto* fx_spk = fx->add_option("--speakers", spec.speakers, "Number of speakers")->check(CLI::PositiveNumber);
  fx->add_flag("--no-audio", fx_no_audio, "Skip WAV synthesis");
  fx->callback([&] {
    action = [&] {
      FixtureSpec s = fx_spec.empty() ? FixtureSpec{} : FixtureSpec::from_json(read_json_file(fx_spec));
      if (fx_n->count()) s.n = spec.n;
      if (fx_seed->count()) s.seed = spec.seed;
      if (fx_tie->count()) s.tie_rate = spec.tie_rate;
      if (fx_spk->count()) s.speakers = spec.speakers;
      if (fx_no_audio) s.audio = false;
      if (s.n == 0) warn("n = 0: writing an empty manifest");
      const Fixture f = generate_fixture(s);
      write_fixture(f, fx_out);
      std::cout << "wrote " << f.utterances.size() << " utterances to " << fx_out.string() << '\n';
    };
  });

  // labels
  auto* lb = app.add_subcommand("labels", "Construct primary/minor label sets and corpus statistics");
  fs::path lb_manifest, lb_out, lb_stats, lb_aliases;
  bool lb_strict = false;
  lb->add_option("--manifest", lb_manifest, "Manifest (JSONL)")->required()->check(CLI::ExistingFile);
  lb->add_option("--out", lb_out, "Per-utterance label sets (JSONL)");
  lb->add_option("--stats", lb_stats, "Corpus statistics (JSON); printed when omitted");
  lb->add_option("--aliases", lb_aliases, "Extra label aliases {\"alias\": \"Emotion\"}")->check(CLI::ExistingFile);
  lb->add_flag("--strict", lb_strict, "Fail on the first bad manifest line");
  lb->callback([&] {
    action = [&] {
      AliasTable aliases;
      if (!lb_aliases.empty()) aliases.extend(read_json_file(lb_aliases));
      ManifestOptions opt;
      opt.strict = lb_strict;
      opt.aliases = &aliases;
      auto load = load_manifest(lb_manifest, opt);
      for (const auto& i : load.issues) warn(lb_manifest.string() + ":" + std::to_string(i.line) + ": " + i.message);
      if (!lb_out.empty()) {
        std::ostringstream o;
        for (const auto& r : load.records) o << json{{"id", r.id}, {"labels", to_json(r.labels)}}.dump() << '\n';
        write_text(lb_out, o.str());
      }
      const json stats = load.records.empty() ? json{{"n", 0}} : to_json(corpus_stats(load.records));
      if (lb_stats.empty()) std::cout << stats.dump(2) << '\n';
      else write_text(lb_stats, stats.dump(2) + "\n");
    };
  });

  // prior
  auto* pr = app.add_subcommand("prior", "Structural co-occurrence prior");
  pr->require_subcommand(1);
  auto* prb = pr->add_subcommand("build", "Build prior.json from a training manifest");
  fs::path prb_manifest, prb_out;
  double prb_lambda = 0.5;
  prb->add_option("--manifest", prb_manifest, "Training manifest")->required()->check(CLI::ExistingFile);
  prb->add_option("--lambda", prb_lambda, "Fusion weight of the primary-minor matrix")->check(CLI::Range(0.0, 1.0));
  prb->add_option("--out", prb_out, "Output prior.json")->required();
  prb->callback([&] {
    action = [&] {
      const auto records = records_of(prb_manifest);
      PriorTable t = build_prior(accumulate(records), prb_lambda);
      t.source_fingerprint = sha256_file(prb_manifest);
      t.source_records = records.size();
      save_prior(t, prb_out);
      std::cout << "prior over " << records.size() << " records written to " << prb_out.string() << '\n';
    };
  });
  auto* prq = pr->add_subcommand("query", "Query a prior the way the agent tool does");
  fs::path prq_prior;
  std::string prq_candidates, prq_intent = "verify", prq_anchor;
  bool prq_tie = false;
  std::size_t prq_k = 3, prq_l = 2;
  prq->add_option("--prior", prq_prior, "prior.json")->required()->check(CLI::ExistingFile);
  prq->add_option("--candidates", prq_candidates, "Comma-separated labels")->required();
  prq->add_option("--intent", prq_intent, "verify or expand")->check(CLI::IsMember({"verify", "expand"}));
  prq->add_option("--anchor", prq_anchor, "Anchor label (verify)");
  prq->add_flag("--tie-mode", prq_tie, "Add tie-pair ranking");
  prq->add_option("-k", prq_k, "Pairs to return");
  prq->add_option("-l", prq_l, "Expansion candidates to return");
  prq->callback([&] {
    action = [&] {
      const PriorTable t = load_prior(prq_prior);
      PriorQuery q;
      for (const auto& c : split_list(prq_candidates)) q.candidates.insert(canonicalize_emotion(c));
      q.intent = prq_intent == "expand" ? PriorIntent::Expand : PriorIntent::Verify;
      if (!prq_anchor.empty()) q.anchor = canonicalize_emotion(prq_anchor);
      q.tie_mode = prq_tie;
      q.top_k = prq_k;
      q.top_l = prq_l;
      std::cout << to_json(query(t, q)).dump(2) << '\n';
    };
  });

  // refstats
  auto* rs = app.add_subcommand("refstats", "Build global acoustic reference statistics");
  fs::path rs_manifest, rs_out;
  std::string rs_scope = "corpus";
  std::size_t rs_jobs = 1;
  rs->add_option("--manifest", rs_manifest, "Training manifest")->required()->check(CLI::ExistingFile);
  rs->add_option("--scope", rs_scope, "corpus or speaker")->check(CLI::IsMember({"corpus", "speaker"}));
  rs->add_option("--out", rs_out, "Output refs.json")->required();
  rs->add_option("--jobs", rs_jobs, "Worker threads")->check(CLI::PositiveNumber);
  rs->callback([&] {
    action = [&] {
      const auto records = records_of(rs_manifest);
      const FrameParams frames;
      GlobalReference ref = build_reference(summarize_records(records, frames, rs_jobs), scope_of(rs_scope));
      ref.manifest_fingerprint = sha256_file(rs_manifest);
      ref.frame_fingerprint = frames.fingerprint();
      for (const auto& n : ref.notes) warn(n);
      save_reference(ref, rs_out);
      std::cout << "reference over " << ref.utterances << " utterances written to " << rs_out.string() << '\n';
    };
  });

  // run
  auto* rn = app.add_subcommand("run", "Run three-phase rollouts");
  fs::path rn_manifest, rn_prior, rn_out, rn_refs, rn_prompts;
  std::string rn_policy, rn_model = "default", rn_audio = "descriptor";
  std::size_t rn_k = 1, rn_max_calls = 12, rn_jobs = 1;
  std::uint64_t rn_seed = 7;
  RemoteConfig rn_remote;
  rn->add_option("--manifest", rn_manifest, "Manifest")->required()->check(CLI::ExistingFile);
  rn->add_option("--prior", rn_prior, "prior.json")->required()->check(CLI::ExistingFile);
  rn->add_option("--policy", rn_policy, "scripted:<script.json> or remote:<url>")->required();
  rn->add_option("--model", rn_model, "Model name sent to a remote endpoint");
  rn->add_option("--rollouts", rn_k, "Rollouts per utterance (K)")->check(CLI::PositiveNumber);
  rn->add_option("--seed", rn_seed, "Base seed");
  rn->add_option("--out", rn_out, "Output directory")->required();
  rn->add_option("--refs", rn_refs, "Global reference refs.json")->check(CLI::ExistingFile);
  rn->add_option("--prompts", rn_prompts, "Directory with phase1.txt, phase2.txt, phase3.txt")->check(CLI::ExistingDirectory);
  rn->add_option("--max-calls", rn_max_calls, "Hard cap on phase-2 tool calls")->check(CLI::PositiveNumber);
  rn->add_option("--jobs", rn_jobs, "Concurrent trajectories")->check(CLI::PositiveNumber);
  rn->add_option("--audio-context", rn_audio, "descriptor or features")->check(CLI::IsMember({"descriptor", "features"}));
  rn->add_option("--timeout", rn_remote.timeout_s, "Remote request timeout (s)");
  rn->add_option("--attempts", rn_remote.attempts, "Remote attempts per step")->check(CLI::PositiveNumber);
  rn->callback([&] {
    action = [&] {
      const auto records = records_of(rn_manifest);
      const PriorTable table = load_prior(rn_prior);
      EngineConfig cfg;
      cfg.prior = &table;
      cfg.max_calls = rn_max_calls;
      cfg.audio_context = audio_context_of(rn_audio);
      if (!rn_prompts.empty()) cfg.prompts = PromptPack::from_dir(rn_prompts);
      std::optional<LoadedReference> ref;
      if (!rn_refs.empty()) {
        ref = load_reference(rn_refs);
        if (ref->fingerprint_mismatch) warn("reference frame fingerprint differs from current frame parameters");
        cfg.reference = &ref->reference;
        cfg.reference_fingerprint_mismatch = ref->fingerprint_mismatch;
      }
      PolicySpec ps = PolicySpec::parse(rn_policy);
      ps.model = rn_model;
      const auto trajectories = run_rollouts(records, make_policy_factory(ps, rn_remote), cfg, rn_k, rn_seed, rn_jobs);
      save_trajectories(trajectories, rn_out / "trajectories.jsonl");
      std::size_t unavailable = 0;
      for (const auto& t : trajectories) unavailable += t.status == "backend_unavailable" ? 1 : 0;
      const json info = {{"utterances", records.size()}, {"rollouts", rn_k}, {"trajectories", trajectories.size()},
                         {"backend_unavailable", unavailable}};
      write_text(rn_out / "run.json", info.dump(2) + "\n");
      std::cout << info.dump() << '\n';
    };
  });

  // score
  auto* sc = app.add_subcommand("score", "Score trajectories: components, trust gate, composite, advantages");
  fs::path sc_traj, sc_gt, sc_out;
  std::string sc_weights = "B";
  std::size_t sc_jobs = 1;
  sc->add_option("--traj", sc_traj, "Trajectory directory or JSONL file")->required()->check(CLI::ExistingPath);
  sc->add_option("--gt", sc_gt, "Manifest with votes")->required()->check(CLI::ExistingFile);
  sc->add_option("--weights", sc_weights, "Preset A, B, C or a JSON override file");
  sc->add_option("--out", sc_out, "Output rewards.jsonl")->required();
  sc->add_option("--jobs", sc_jobs, "Worker threads")->check(CLI::PositiveNumber);
  sc->callback([&] {
    action = [&] {
      const RewardWeights w = weights_of(sc_weights);
      const auto groups = score_trajectories(load_trajectories(trajectory_file(sc_traj)), label_map(records_of(sc_gt)), w, sc_jobs);
      save_rewards(groups, w, sc_out);
      std::cout << "scored " << groups.size() << " groups with weights " << w.name << '\n';
    };
  });

  // eval
  auto* ev = app.add_subcommand("eval", "Ambiguity-aware evaluation report");
  fs::path ev_traj, ev_gt, ev_out;
  ev->add_option("--traj", ev_traj, "Trajectory directory or JSONL file")->required()->check(CLI::ExistingPath);
  ev->add_option("--gt", ev_gt, "Manifest with votes")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", ev_out, "Output report.json");
  ev->callback([&] {
    action = [&] {
      const json r = to_json(evaluate(load_trajectories(trajectory_file(ev_traj)), label_map(records_of(ev_gt))));
      if (ev_out.empty()) std::cout << r.dump(2) << '\n';
      else write_text(ev_out, r.dump(2) + "\n");
    };
  });

  // report
  auto* rp = app.add_subcommand("report", "Text tables and plot data from an eval report");
  fs::path rp_eval, rp_rewards, rp_out, rp_figures;
  rp->add_option("--eval", rp_eval, "report.json")->required()->check(CLI::ExistingFile);
  rp->add_option("--rewards", rp_rewards, "rewards.jsonl")->check(CLI::ExistingFile);
  rp->add_option("--out", rp_out, "Text output; stdout when omitted");
  rp->add_option("--figures", rp_figures, "Plot data output (JSON)");
  rp->callback([&] {
    action = [&] {
      const json r = read_json_file(rp_eval);
      const auto lines = rp_rewards.empty() ? std::vector<json>{} : read_json_lines(rp_rewards);
      const std::string text = render_report(r, lines);
      if (rp_out.empty()) std::cout << text;
      else write_text(rp_out, text);
      if (!rp_figures.empty()) write_text(rp_figures, figure_data(r).dump(2) + "\n");
    };
  });

  // pipeline
  auto* pl = app.add_subcommand("pipeline", "labels -> prior -> refstats -> run -> score -> eval -> report");
  PipelineConfig pc;
  std::string pl_policy, pl_scope = "corpus", pl_audio = "descriptor";
  pl->add_option("--train", pc.train_manifest, "Training manifest (prior and reference)")->required()->check(CLI::ExistingFile);
  pl->add_option("--manifest", pc.eval_manifest, "Evaluation manifest")->required()->check(CLI::ExistingFile);
  pl->add_option("--out", pc.out_dir, "Output directory")->required();
  pl->add_option("--policy", pl_policy, "scripted:<script.json> or remote:<url>")->required();
  pl->add_option("--model", pc.policy.model, "Remote model name");
  pl->add_option("--rollouts", pc.rollouts, "Rollouts per utterance (K)")->check(CLI::PositiveNumber);
  pl->add_option("--seed", pc.seed, "Base seed");
  pl->add_option("--weights", pc.weights, "Preset A, B, C or a JSON override file");
  pl->add_option("--lambda", pc.lambda, "Prior fusion weight")->check(CLI::Range(0.0, 1.0));
  pl->add_option("--scope", pl_scope, "corpus or speaker")->check(CLI::IsMember({"corpus", "speaker"}));
  pl->add_option("--max-calls", pc.max_calls, "Hard cap on phase-2 tool calls")->check(CLI::PositiveNumber);
  pl->add_option("--audio-context", pl_audio, "descriptor or features")->check(CLI::IsMember({"descriptor", "features"}));
  pl->add_option("--jobs", pc.jobs, "Worker threads")->check(CLI::PositiveNumber);
  pl->add_flag("--resume", pc.resume, "Skip stages whose inputs and outputs are unchanged");
  pl->callback([&] {
    action = [&] {
      const std::string model = pc.policy.model;
      pc.policy = PolicySpec::parse(pl_policy);
      pc.policy.model = model;
      pc.scope = scope_of(pl_scope);
      pc.audio_context = audio_context_of(pl_audio);
      const auto outcomes = run_pipeline(pc, [](const std::string& m) { std::cerr << m << '\n'; });
      for (const auto& o : outcomes) std::cout << o.stage << (o.ran ? " ran" : " skipped") << '\n';
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    if (action) action();
  } catch (const Error& e) {
    std::cerr << "adept: error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "adept: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
