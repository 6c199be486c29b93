#include "adept/policy.hpp"

namespace adept {

nlohmann::json to_json(const ChatMessage& m) {
  nlohmann::json j = {{"role", m.role}, {"content", m.content}};
  if (m.tool_call_id) j["tool_call_id"] = *m.tool_call_id;
  if (m.tool_name) {
    j["tool_name"] = *m.tool_name;
    j["tool_args"] = m.tool_args;
  }
  return j;
}

nlohmann::json to_json(const PolicyContext& c) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : c.messages) msgs.push_back(to_json(m));
  nlohmann::json tools = nlohmann::json::array();
  for (const auto& t : c.tools) {
    tools.push_back({{"name", t.name}, {"description", t.description}, {"parameters", t.parameters}});
  }
  nlohmann::json obs = nlohmann::json::array();
  for (const auto& o : c.observations) obs.push_back(to_json(o));
  return {{"phase", phase_number(c.phase)},
          {"utterance_id", c.utterance_id},
          {"system_prompt", c.system_prompt},
          {"messages", msgs},
          {"tools", tools},
          {"observations", obs}};
}

PolicyAction PolicyAction::say(std::string text) {
  PolicyAction a;
  a.kind = Kind::Text;
  a.text = std::move(text);
  return a;
}

PolicyAction PolicyAction::call(std::string name, nlohmann::json args) {
  PolicyAction a;
  a.kind = Kind::ToolCall;
  a.tool_name = std::move(name);
  a.tool_args = std::move(args);
  return a;
}

}  // namespace adept
