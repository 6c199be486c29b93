#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace adept {

// Validates `value` against a small JSON-Schema subset: type (single or list),
// properties, required, additionalProperties (bool), items, minItems,
// maxItems, minLength, enum, minimum, maximum, anyOf. Returns one message per
// failure, each prefixed with a JSON pointer; empty means valid.
std::vector<std::string> validate_schema(const nlohmann::json& schema, const nlohmann::json& value);

}  // namespace adept
