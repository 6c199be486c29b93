#include "adept/engine.hpp"

#include <fstream>
#include <sstream>

#include "adept/assets.hpp"
#include "adept/error.hpp"
#include "adept/wav.hpp"

namespace adept {

namespace {

using nlohmann::json;

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Unwinds the run after a fatal policy failure has been recorded.
struct Abort {};

class Run {
 public:
  Run(const UtteranceInput& in, Policy& policy, const EngineConfig& cfg, Trajectory& t)
      : in_(in), policy_(policy), cfg_(cfg), t_(t),
        aliases_(cfg.aliases ? *cfg.aliases : default_aliases()) {
    tools_.record = in.record;
    tools_.acoustics = in.acoustics.get();
    tools_.audio_error = in.audio_error;
    tools_.prior = cfg.prior;
    tools_.hotspots = cfg.hotspots;
    tools_.semantic = cfg.semantic;
    tools_.latest_acoustic = &latest_acoustic_;
    if (cfg.reference) {
      const auto lookup = cfg.reference->for_speaker(in.record->speaker);
      tools_.analyze.global = lookup.table;
      tools_.analyze.global_scope = lookup.scope;
      tools_.analyze.global_fingerprint_mismatch = cfg.reference_fingerprint_mismatch;
    }
  }

  void phase1() {
    PolicyContext ctx = base_context(Phase::One);
    ctx.messages.push_back({"user", utterance_brief(), {}, {}, {}});
    const auto text = ask_without_tools(ctx, violation::kPhase1ToolCall);
    const auto parse = validate_phase_output(Phase::One, text, aliases_);
    absorb(parse);
    t_.phase1 = parse.phase1;
    t_.candidate_history.push_back(t_.phase1 ? t_.phase1->pool_set() : EmotionSet{});
  }

  void phase2() {
    PolicyContext ctx = base_context(Phase::Two);
    json intro = {{"utterance", brief_json()}, {"phase1_output", phase1_view()}};
    ctx.messages.push_back({"user", intro.dump(), {}, {}, {}});
    std::size_t executed = 0;
    bool prior_called = false;
    bool budget_note = false;
    while (true) {
      const bool tools_on = executed < cfg_.max_calls;
      ctx.tools = tools_on ? tool_registry() : std::vector<ToolSpec>{};
      ctx.observations = t_.observations;
      if (!tools_on && !budget_note) {
        budget_note = true;
        ctx.messages.push_back({"user", "The tool budget is used up. Reply now with the final_decision JSON object.", {}, {}, {}});
      }
      const PolicyAction a = step(ctx);
      if (a.kind == PolicyAction::Kind::Text) {
        t_.raw_outputs[1] = a.text;
        const auto parse = validate_phase_output(Phase::Two, a.text, aliases_);
        absorb(parse);
        t_.phase2 = parse.phase2;
        break;
      }
      if (!tools_on) {
        record_call(Phase::Two, a, false);
        diagnose(violation::kBudgetExhausted, Phase::Two, "call to " + a.tool_name + " after " +
                                                                std::to_string(executed) + " calls");
        violate(violation::kMissingFinalDecision, Phase::Two, "policy kept calling tools after the budget");
        break;
      }
      prior_called = dispatch(ctx, a) || prior_called;
      ++executed;
    }
    if (!prior_called) {
      violate(violation::kMissingMandatoryTool, Phase::Two, "no valid StructuralPriorTool call in phase 2");
    }
  }

  void phase3() {
    PolicyContext ctx = base_context(Phase::Three);
    json obs = json::array();
    for (const auto& o : t_.observations) {
      if (is_prior_tool(o.tool)) continue;
      ctx.observations.push_back(o);
      obs.push_back({{"id", o.id}, {"tool", o.tool}, {"args", o.args}, {"status", o.status}, {"payload", o.payload}});
    }
    json view = {{"phase1_output", phase1_view()},
                 {"phase2_output", t_.phase2 ? to_json(*t_.phase2) : json(nullptr)},
                 {"observations", obs}};
    ctx.messages.push_back({"user", view.dump(), {}, {}, {}});
    const auto text = ask_without_tools(ctx, violation::kPhase3ToolCall);
    const auto parse = validate_phase_output(Phase::Three, text, aliases_);
    absorb(parse);
    t_.phase3 = parse.phase3;
    if (!t_.phase3) return;
    t_.predicted_primary = t_.phase3->primary;
    t_.predicted_minor = t_.phase3->minor;
    for (const auto& id : t_.phase3->evidence) {
      const bool visible = std::any_of(ctx.observations.begin(), ctx.observations.end(),
                                       [&](const Observation& o) { return o.id == id; });
      if (!visible) diagnose(violation::kDanglingCitation, Phase::Three, "cited id " + id + " is not in the ledger");
    }
    if (t_.phase2 && (t_.phase2->primary != t_.phase3->primary || t_.phase2->minor != t_.phase3->minor)) {
      diagnose(violation::kPhaseDisagreement, Phase::Three, "phase-3 labels differ from the phase-2 decision");
    }
  }

  void fail(Phase phase, const Error& e) {
    switch (e.code()) {
      case ErrorCode::TransportError:
        t_.status = "backend_unavailable";
        diagnose("backend_unavailable", phase, e.what());
        break;
      case ErrorCode::PolicyTimeout:
        violate(violation::kPolicyTimeout, phase, e.what());
        break;
      default:
        violate(violation::kMalformedPolicyMessage, phase, e.what());
        break;
    }
    t_.predicted_primary = {};
    t_.predicted_minor = {};
  }

  Phase current = Phase::One;

 private:
  PolicyContext base_context(Phase p) {
    current = p;
    PolicyContext ctx;
    ctx.phase = p;
    ctx.utterance_id = in_.record->id;
    ctx.system_prompt = cfg_.prompts.for_phase(p);
    return ctx;
  }

  json brief_json() const {
    const auto& r = *in_.record;
    json words = json::array();
    for (std::size_t i = 0; i < r.alignment.size(); ++i) {
      words.push_back({{"index", i}, {"word", r.alignment[i].word}, {"start", r.alignment[i].start_s}, {"end", r.alignment[i].end_s}});
    }
    json audio = {{"ref", r.audio.generic_string()}};
    if (in_.acoustics) {
      audio["duration_s"] = in_.acoustics->track.duration_s;
      audio["sample_rate"] = in_.acoustics->track.sample_rate;
      if (cfg_.audio_context == AudioContext::FeatureSummary) {
        try {
          audio["summary"] = to_json(analyze_segment(*in_.acoustics, {0.0, in_.acoustics->track.duration_s}, {},
                                                     tools_.analyze));
        } catch (const Error& e) {
          audio["summary_error"] = e.what();
        }
      }
    } else {
      audio["error"] = in_.audio_error;
    }
    return {{"id", r.id}, {"transcript", r.transcript}, {"words", words}, {"audio", audio}};
  }

  std::string utterance_brief() const { return brief_json().dump(); }

  json phase1_view() const {
    if (t_.phase1) return to_json(*t_.phase1);
    return t_.raw_outputs[0] ? json(*t_.raw_outputs[0]) : json(nullptr);
  }

  PolicyAction step(const PolicyContext& ctx) {
    if (cfg_.on_context) cfg_.on_context(ctx);
    PolicyAction a = policy_.act(ctx);
    if (a.transport_retries > 0) {
      diagnose(violation::kTransportRetry, ctx.phase, std::to_string(a.transport_retries) + " retries");
    }
    return a;
  }

  // Phases 1 and 3: tool calls are suppressed and the policy is asked again.
  std::string ask_without_tools(PolicyContext& ctx, std::string_view code) {
    const int idx = phase_number(ctx.phase) - 1;
    for (std::size_t attempt = 0; attempt <= cfg_.max_reasks; ++attempt) {
      const PolicyAction a = step(ctx);
      if (a.kind == PolicyAction::Kind::Text) {
        t_.raw_outputs[idx] = a.text;
        return a.text;
      }
      record_call(ctx.phase, a, false);
      violate(code, ctx.phase, "suppressed call to " + a.tool_name);
      ctx.messages.push_back({"user", "Tools are not available in this phase. Reply with the JSON object only.", {}, {}, {}});
    }
    violate(violation::kMalformedPolicyMessage, ctx.phase, "no phase output after repeated tool calls");
    throw Abort{};
  }

  ToolCallRecord& record_call(Phase p, const PolicyAction& a, bool executed) {
    ToolCallRecord c;
    c.seq = t_.calls.size() + 1;
    c.phase = p;
    c.name = a.tool_name;
    c.args = a.tool_args;
    c.executed = executed;
    t_.calls.push_back(std::move(c));
    return t_.calls.back();
  }

  // Returns true when the call satisfies the mandatory prior check.
  bool dispatch(PolicyContext& ctx, const PolicyAction& a) {
    ToolCallRecord& call = record_call(Phase::Two, a, true);
    const std::string call_id = "call-" + std::to_string(call.seq);
    tools_.current_candidates = t_.candidate_history.back();

    ToolResult r;
    if (a.args_error) {
      r.status = "error";
      r.payload = {{"error", "invalid_arguments"}, {"message", *a.args_error}};
    } else {
      r = execute_tool(a.tool_name, a.tool_args, tools_);
    }
    const std::string err = r.status == "error" ? r.payload.value("error", std::string()) : std::string();
    const bool invalid = err == "invalid_arguments" || err == "unknown_tool";
    if (invalid) diagnose(violation::kInvalidToolCall, Phase::Two, a.tool_name + ": " + r.payload.value("message", err));

    Observation o;
    o.seq = t_.observations.size() + 1;
    o.id = "obs-" + std::to_string(o.seq);
    o.phase = Phase::Two;
    o.tool = canonical_tool_name(a.tool_name).value_or(a.tool_name);
    o.called_as = a.tool_name;
    o.args = a.tool_args;
    o.status = r.status;
    o.payload = r.payload;
    o.hash = observation_hash(o, t_.observations.empty() ? std::string() : t_.observations.back().hash);
    call.observation_id = o.id;

    if (r.queried_candidates) t_.candidate_history.push_back(*r.queried_candidates);
    if (!r.acoustic.empty()) latest_acoustic_ = r.acoustic;

    ChatMessage req{"assistant", "", call_id, a.tool_name, a.tool_args};
    json shown = {{"observation_id", o.id}, {"status", o.status}, {"payload", o.payload}};
    ChatMessage res{"tool", shown.dump(), call_id, {}, {}};
    ctx.messages.push_back(std::move(req));
    ctx.messages.push_back(std::move(res));
    t_.observations.push_back(std::move(o));

    return is_prior_tool(t_.observations.back().tool) && !invalid;
  }

  void absorb(const PhaseParse& p) {
    for (const auto& v : p.violations) t_.violations.push_back(v);
    for (const auto& d : p.diagnostics) t_.diagnostics.push_back(d);
  }

  void violate(std::string_view code, Phase p, std::string detail) {
    t_.violations.push_back({std::string(code), p, std::move(detail)});
  }

  void diagnose(std::string_view code, Phase p, std::string detail) {
    t_.diagnostics.push_back({std::string(code), p, std::move(detail)});
  }

  const UtteranceInput& in_;
  Policy& policy_;
  const EngineConfig& cfg_;
  Trajectory& t_;
  const AliasTable& aliases_;
  ToolContext tools_;
  std::vector<AcousticObservation> latest_acoustic_;
};

}  // namespace

const std::string& PromptPack::for_phase(Phase p) const {
  switch (p) {
    case Phase::One: return phase1;
    case Phase::Two: return phase2;
    case Phase::Three: return phase3;
  }
  return phase1;
}

PromptPack PromptPack::builtin() {
  return {std::string(builtin_asset("prompts/phase1.txt")), std::string(builtin_asset("prompts/phase2.txt")),
          std::string(builtin_asset("prompts/phase3.txt"))};
}

PromptPack PromptPack::from_dir(const std::filesystem::path& dir) {
  return {read_text(dir / "phase1.txt"), read_text(dir / "phase2.txt"), read_text(dir / "phase3.txt")};
}

UtteranceInput prepare_utterance(const UtteranceRecord& record, const FrameParams& frames) {
  UtteranceInput in;
  in.record = &record;
  try {
    in.acoustics = std::make_shared<const UtteranceAcoustics>(prepare_acoustics(read_wav(record.audio), frames));
  } catch (const Error& e) {
    in.audio_error = std::string(to_string(e.code())) + ": " + e.what();
  }
  return in;
}

std::uint64_t rollout_seed(std::uint64_t base_seed, const std::string& utterance_id, std::size_t rollout) {
  return splitmix64(splitmix64(base_seed ^ fnv1a(utterance_id)) + rollout);
}

Trajectory run_trajectory(const UtteranceInput& input, Policy& policy, const EngineConfig& config,
                          std::uint64_t seed, std::size_t rollout) {
  if (!input.record) throw Error(ErrorCode::PreconditionFailed, "no utterance record");
  if (!config.prior) throw Error(ErrorCode::PreconditionFailed, "no prior table");
  Trajectory t;
  t.utterance_id = input.record->id;
  t.rollout = rollout;
  t.seed = rollout_seed(seed, t.utterance_id, rollout);
  t.policy = policy.name();
  policy.reset(t.seed, t.utterance_id);

  Run run(input, policy, config, t);
  try {
    run.phase1();
    run.phase2();
    run.phase3();
  } catch (const Abort&) {
    t.predicted_primary = {};
    t.predicted_minor = {};
  } catch (const Error& e) {
    run.fail(run.current, e);
  }
  return t;
}

}  // namespace adept
