#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <regex>
#include <thread>

#include "adept/error.hpp"
#include "adept/policy.hpp"

namespace adept {

namespace {

using nlohmann::json;

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw Error(ErrorCode::TransportError, "unsupported endpoint url: " + url);
  return {m[1].str(), m[2].matched ? m[2].str() : "/v1/chat/completions"};
}

json wire_message(const ChatMessage& m) {
  if (m.role == "assistant" && m.tool_name) {
    return {{"role", "assistant"},
            {"content", nullptr},
            {"tool_calls",
             {{{"id", m.tool_call_id.value_or("call")},
               {"type", "function"},
               {"function", {{"name", *m.tool_name}, {"arguments", m.tool_args.dump()}}}}}}};
  }
  if (m.role == "tool") {
    return {{"role", "tool"}, {"tool_call_id", m.tool_call_id.value_or("call")}, {"content", m.content}};
  }
  return {{"role", m.role}, {"content", m.content}};
}

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedPolicyMessage, what); }

}  // namespace

RemotePolicy::RemotePolicy(RemoteConfig config) : config_(std::move(config)) {}

void RemotePolicy::reset(std::uint64_t seed, const std::string&) { seed_ = seed; }

json RemotePolicy::request_body(const PolicyContext& ctx) const {
  json messages = json::array();
  messages.push_back({{"role", "system"}, {"content", ctx.system_prompt}});
  for (const auto& m : ctx.messages) messages.push_back(wire_message(m));
  json body = {{"model", config_.model},
               {"temperature", config_.temperature},
               {"seed", seed_ & 0x7fffffffffffffffULL},
               {"messages", messages}};
  if (!ctx.tools.empty()) {
    json tools = json::array();
    for (const auto& t : ctx.tools) {
      tools.push_back({{"type", "function"},
                       {"function", {{"name", t.name}, {"description", t.description}, {"parameters", t.parameters}}}});
    }
    body["tools"] = tools;
    body["tool_choice"] = "auto";
  }
  return body;
}

PolicyAction RemotePolicy::parse_response(const std::string& body) {
  const json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) malformed("response is not JSON");
  if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    malformed("response has no choices");
  }
  const json& msg = j["choices"][0].value("message", json::object());
  if (msg.contains("tool_calls") && msg["tool_calls"].is_array() && !msg["tool_calls"].empty()) {
    const json& fn = msg["tool_calls"][0].value("function", json::object());
    if (!fn.contains("name") || !fn["name"].is_string()) malformed("tool call without a name");
    PolicyAction a = PolicyAction::call(fn["name"].get<std::string>(), json::object());
    const json raw = fn.value("arguments", json("{}"));
    json args = raw;
    if (raw.is_string()) args = json::parse(raw.get<std::string>(), nullptr, false);
    if (args.is_discarded() || !args.is_object()) {
      a.args_error = "arguments are not a JSON object: " + (raw.is_string() ? raw.get<std::string>() : raw.dump());
      a.tool_args = raw;
    } else {
      a.tool_args = args;
    }
    return a;
  }
  if (!msg.contains("content") || !msg["content"].is_string()) malformed("message has neither content nor tool call");
  return PolicyAction::say(msg["content"].get<std::string>());
}

PolicyAction RemotePolicy::act(const PolicyContext& ctx) {
  const Endpoint ep = split_url(config_.url);
  httplib::Client cli(ep.origin);
  const auto secs = std::chrono::duration<double>(config_.timeout_s);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(secs);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);

  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const std::string body = request_body(ctx).dump();
  const int attempts = std::max(1, config_.attempts);
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      const long delay = std::min<long>(config_.backoff_cap_ms, static_cast<long>(config_.backoff_initial_ms) << (attempt - 1));
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
    auto res = cli.Post(ep.path, headers, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "http status " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorCode::TransportError, "http status " + std::to_string(res->status));
    }
    PolicyAction a = parse_response(res->body);
    a.transport_retries = static_cast<std::size_t>(attempt);
    return a;
  }
  throw Error(ErrorCode::TransportError,
              "endpoint unavailable after " + std::to_string(attempts) + " attempts: " + last_error);
}

PolicyFactory remote_policy(RemoteConfig config) {
  return [config = std::move(config)] { return std::make_unique<RemotePolicy>(config); };
}

}  // namespace adept
