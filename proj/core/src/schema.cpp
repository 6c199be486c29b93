#include "adept/schema.hpp"

namespace adept {

namespace {

bool type_matches(const std::string& type, const nlohmann::json& v) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "number") return v.is_number();
  if (type == "integer") return v.is_number_integer() || (v.is_number_float() && v.get<double>() == static_cast<double>(static_cast<long long>(v.get<double>())));
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  return false;
}

void check(const nlohmann::json& s, const nlohmann::json& v, const std::string& path, std::vector<std::string>& errs) {
  const std::string where = path.empty() ? "/" : path;
  if (s.contains("type")) {
    bool ok = false;
    if (s["type"].is_array()) {
      for (const auto& t : s["type"]) ok = ok || type_matches(t.get<std::string>(), v);
    } else {
      ok = type_matches(s["type"].get<std::string>(), v);
    }
    if (!ok) {
      errs.push_back(where + ": expected type " + s["type"].dump());
      return;
    }
  }
  if (s.contains("enum")) {
    bool found = false;
    for (const auto& e : s["enum"]) found = found || e == v;
    if (!found) errs.push_back(where + ": value " + v.dump() + " not in " + s["enum"].dump());
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (s.contains("minimum") && x < s["minimum"].get<double>()) errs.push_back(where + ": below minimum");
    if (s.contains("maximum") && x > s["maximum"].get<double>()) errs.push_back(where + ": above maximum");
  }
  if (v.is_string() && s.contains("minLength") && v.get<std::string>().size() < s["minLength"].get<std::size_t>()) {
    errs.push_back(where + ": string shorter than " + s["minLength"].dump());
  }
  if (v.is_array()) {
    if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>()) {
      errs.push_back(where + ": fewer than " + s["minItems"].dump() + " items");
    }
    if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>()) {
      errs.push_back(where + ": more than " + s["maxItems"].dump() + " items");
    }
    if (s.contains("items")) {
      for (std::size_t i = 0; i < v.size(); ++i) check(s["items"], v[i], path + "/" + std::to_string(i), errs);
    }
  }
  if (v.is_object()) {
    const auto props = s.value("properties", nlohmann::json::object());
    for (const auto& r : s.value("required", nlohmann::json::array())) {
      if (!v.contains(r.get<std::string>())) errs.push_back(where + ": missing required property '" + r.get<std::string>() + "'");
    }
    for (const auto& [k, sub] : v.items()) {
      if (props.contains(k)) {
        check(props[k], sub, path + "/" + k, errs);
      } else if (s.contains("additionalProperties") && s["additionalProperties"].is_boolean() &&
                 !s["additionalProperties"].get<bool>()) {
        errs.push_back(where + ": unexpected property '" + k + "'");
      }
    }
  }
  if (s.contains("anyOf")) {
    bool any = false;
    for (const auto& alt : s["anyOf"]) {
      std::vector<std::string> sub;
      check(alt, v, path, sub);
      if (sub.empty()) {
        any = true;
        break;
      }
    }
    if (!any) errs.push_back(where + ": matches none of the allowed forms");
  }
}

}  // namespace

std::vector<std::string> validate_schema(const nlohmann::json& schema, const nlohmann::json& value) {
  std::vector<std::string> errs;
  check(schema, value, "", errs);
  return errs;
}

}  // namespace adept
