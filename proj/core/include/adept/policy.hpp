#pragma once

#include <cstdint>
#include <memory>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adept/tools.hpp"
#include "adept/trajectory.hpp"

namespace adept {

struct ChatMessage {
  std::string role;  // system | user | assistant | tool
  std::string content;
  // Set on assistant tool-call messages and on the matching tool result.
  std::optional<std::string> tool_call_id;
  std::optional<std::string> tool_name;
  nlohmann::json tool_args;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

// What the policy is allowed to see at one step.
struct PolicyContext {
  Phase phase = Phase::One;
  std::string utterance_id;
  std::string system_prompt;
  std::vector<ChatMessage> messages;
  std::vector<ToolSpec> tools;  // empty unless tools are offered
  std::vector<Observation> observations;  // ledger entries visible in this phase
};

nlohmann::json to_json(const ChatMessage& m);
nlohmann::json to_json(const PolicyContext& c);

struct PolicyAction {
  enum class Kind { Text, ToolCall };
  Kind kind = Kind::Text;
  std::string text;
  std::string tool_name;
  nlohmann::json tool_args = nlohmann::json::object();
  // Set when the wire arguments were not a JSON object; the call is then invalid.
  std::optional<std::string> args_error;
  std::size_t transport_retries = 0;

  static PolicyAction say(std::string text);
  static PolicyAction call(std::string name, nlohmann::json args);
};

// Step contract. Implementations may throw Error with ScriptExhausted,
// MalformedPolicyMessage, PolicyTimeout or TransportError; the engine turns
// those into violations or a backend_unavailable status.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual void reset(std::uint64_t seed, const std::string& utterance_id) = 0;
  virtual PolicyAction act(const PolicyContext& context) = 0;
};

// One fresh policy per trajectory, so rollouts can run concurrently.
using PolicyFactory = std::function<std::unique_ptr<Policy>()>;

// Script shape, per utterance or shared:
//   {"phase1": [action...], "phase2": [...], "phase3": [...]}
// optionally wrapped as {"default": script, "utterances": {"<id>": script}}.
// Actions:
//   {"emit": <object>}            terminal output, serialized as JSON
//   {"emit_raw": "<text>"}        terminal output, verbatim
//   {"call": "<tool>", "args": {}}
//   {"branch": {"when": {"tool": t, "field": "/json/pointer", "equals": v},
//               "then": [...], "else": [...]}}
//   {"choice": [[...], [...]]}    one list picked by the seeded generator
// Strings of the form "${obs:last}" or "${obs:<tool>}" inside emitted objects
// and call args are replaced by the newest matching visible observation id.
class ScriptedPolicy final : public Policy {
 public:
  explicit ScriptedPolicy(std::shared_ptr<const nlohmann::json> script, std::string label = "scripted");

  std::string name() const override { return label_; }
  void reset(std::uint64_t seed, const std::string& utterance_id) override;
  PolicyAction act(const PolicyContext& context) override;

 private:
  std::shared_ptr<const nlohmann::json> script_;
  std::string label_;
  std::mt19937_64 rng_;
  const nlohmann::json* active_ = nullptr;
  std::vector<nlohmann::json> queue_[3];
  bool loaded_[3] = {false, false, false};
};

PolicyFactory scripted_policy(std::shared_ptr<const nlohmann::json> script, std::string label = "scripted");

struct RemoteConfig {
  std::string url;  // http(s)://host[:port]/path of a chat-completions endpoint
  std::string model;
  std::string api_key_env = "ADEPT_API_KEY";
  double timeout_s = 30.0;
  int attempts = 3;
  int backoff_initial_ms = 250;
  int backoff_cap_ms = 4000;
  double temperature = 0.0;
};

class RemotePolicy final : public Policy {
 public:
  explicit RemotePolicy(RemoteConfig config);

  std::string name() const override { return "remote:" + config_.model; }
  void reset(std::uint64_t seed, const std::string& utterance_id) override;
  PolicyAction act(const PolicyContext& context) override;

  // Request body for one step; exposed for tests.
  nlohmann::json request_body(const PolicyContext& context) const;
  // Throws MalformedPolicyMessage when the body is not a usable completion.
  static PolicyAction parse_response(const std::string& body);

 private:
  RemoteConfig config_;
  std::uint64_t seed_ = 0;
};

PolicyFactory remote_policy(RemoteConfig config);

}  // namespace adept
