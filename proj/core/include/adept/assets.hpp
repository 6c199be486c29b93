#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace adept {

// Built-in text assets (lexicon.json, profiles.json, prompts/phase{1,2,3}.txt).
// Throws Error{Io} for unknown names.
std::string_view builtin_asset(std::string_view name);
std::vector<std::string> builtin_asset_names();

}  // namespace adept
