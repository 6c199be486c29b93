#include <algorithm>

#include "adept/error.hpp"
#include "adept/policy.hpp"

namespace adept {

namespace {

using nlohmann::json;

const char* phase_key(Phase p) {
  switch (p) {
    case Phase::One: return "phase1";
    case Phase::Two: return "phase2";
    case Phase::Three: return "phase3";
  }
  return "phase1";
}

const Observation* newest(const PolicyContext& ctx, std::string_view tool) {
  for (auto it = ctx.observations.rbegin(); it != ctx.observations.rend(); ++it) {
    if (tool == "last" || it->tool == tool || it->called_as == tool) return &*it;
  }
  return nullptr;
}

json substitute(const json& v, const PolicyContext& ctx) {
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    if (s.size() > 7 && s.rfind("${obs:", 0) == 0 && s.back() == '}') {
      const auto* o = newest(ctx, std::string_view(s).substr(6, s.size() - 7));
      return o ? json(o->id) : v;
    }
    return v;
  }
  if (v.is_array()) {
    json out = json::array();
    for (const auto& e : v) out.push_back(substitute(e, ctx));
    return out;
  }
  if (v.is_object()) {
    json out = json::object();
    for (auto it = v.begin(); it != v.end(); ++it) out[it.key()] = substitute(it.value(), ctx);
    return out;
  }
  return v;
}

bool condition_holds(const json& when, const PolicyContext& ctx) {
  const auto* o = newest(ctx, when.value("tool", std::string("last")));
  if (!o) return false;
  const json::json_pointer ptr(when.value("field", std::string()));
  if (!o->payload.contains(ptr)) return false;
  if (!when.contains("equals")) return true;
  return o->payload.at(ptr) == when["equals"];
}

[[noreturn]] void bad_script(const std::string& what) {
  throw Error(ErrorCode::MalformedPolicyMessage, "script: " + what);
}

}  // namespace

ScriptedPolicy::ScriptedPolicy(std::shared_ptr<const json> script, std::string label)
    : script_(std::move(script)), label_(std::move(label)) {
  if (!script_) script_ = std::make_shared<const json>(json::object());
}

void ScriptedPolicy::reset(std::uint64_t seed, const std::string& utterance_id) {
  rng_.seed(seed);
  active_ = script_.get();
  if (script_->is_object() && (script_->contains("default") || script_->contains("utterances"))) {
    active_ = nullptr;
    if (script_->contains("utterances") && (*script_)["utterances"].contains(utterance_id)) {
      active_ = &(*script_)["utterances"][utterance_id];
    } else if (script_->contains("default")) {
      active_ = &(*script_)["default"];
    }
  }
  for (int i = 0; i < 3; ++i) {
    queue_[i].clear();
    loaded_[i] = false;
  }
}

PolicyAction ScriptedPolicy::act(const PolicyContext& ctx) {
  const int idx = phase_number(ctx.phase) - 1;
  auto& q = queue_[idx];
  if (!loaded_[idx]) {
    loaded_[idx] = true;
    if (active_ && active_->is_object() && active_->contains(phase_key(ctx.phase))) {
      const auto& list = (*active_)[phase_key(ctx.phase)];
      if (!list.is_array()) bad_script(std::string(phase_key(ctx.phase)) + " is not a list");
      // Stored reversed so the next action is at the back.
      q.assign(list.rbegin(), list.rend());
    }
  }
  while (true) {
    if (q.empty()) {
      throw Error(ErrorCode::ScriptExhausted, std::string("no scripted action left for ") + phase_key(ctx.phase));
    }
    const json a = std::move(q.back());
    q.pop_back();
    if (!a.is_object()) bad_script("action is not an object");
    if (a.contains("emit")) return PolicyAction::say(substitute(a["emit"], ctx).dump());
    if (a.contains("emit_raw")) return PolicyAction::say(a["emit_raw"].get<std::string>());
    if (a.contains("call")) {
      return PolicyAction::call(a["call"].get<std::string>(), substitute(a.value("args", json::object()), ctx));
    }
    const json* chosen = nullptr;
    if (a.contains("branch")) {
      const auto& b = a["branch"];
      const char* arm = condition_holds(b.value("when", json::object()), ctx) ? "then" : "else";
      if (b.contains(arm)) chosen = &b[arm];
    } else if (a.contains("choice")) {
      const auto& options = a["choice"];
      if (!options.is_array() || options.empty()) bad_script("choice needs a non-empty list");
      chosen = &options[static_cast<std::size_t>(rng_() % options.size())];
    } else {
      bad_script("unknown action " + a.dump());
    }
    if (chosen) {
      if (!chosen->is_array()) bad_script("branch arm is not a list");
      for (auto it = chosen->rbegin(); it != chosen->rend(); ++it) q.push_back(*it);
    }
  }
}

PolicyFactory scripted_policy(std::shared_ptr<const json> script, std::string label) {
  return [script = std::move(script), label = std::move(label)] {
    return std::make_unique<ScriptedPolicy>(script, label);
  };
}

}  // namespace adept
