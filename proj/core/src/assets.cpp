#include "adept/assets.hpp"

#include <map>

#include "adept/error.hpp"

namespace adept {

namespace detail {
const std::map<std::string, std::string_view>& embedded_assets();
}

std::string_view builtin_asset(std::string_view name) {
  const auto& assets = detail::embedded_assets();
  auto it = assets.find(std::string(name));
  if (it == assets.end()) throw Error(ErrorCode::Io, "no built-in asset named '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> builtin_asset_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : detail::embedded_assets()) out.push_back(k);
  return out;
}

}  // namespace adept
