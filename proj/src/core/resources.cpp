#include "thinkmt/core/resources.hpp"

#include "thinkmt/core/error.hpp"

namespace thinkmt::resources {

std::string_view get(std::string_view name) {
  for (const auto& e : detail::table()) {
    if (e.name == name) return e.data;
  }
  throw InvalidArgument("unknown resource '" + std::string(name) + "'");
}

std::vector<std::string_view> names() {
  std::vector<std::string_view> out;
  for (const auto& e : detail::table()) out.push_back(e.name);
  return out;
}

std::string render(std::string_view tmpl, const Slots& slots) {
  std::string out;
  out.reserve(tmpl.size() * 2);
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find('{', pos);
    if (open == std::string_view::npos) break;
    const auto close = tmpl.find('}', open + 1);
    if (close == std::string_view::npos) break;
    const auto name = tmpl.substr(open + 1, close - open - 1);
    if (name.empty() || name.find('{') != std::string_view::npos || name.find('\n') != std::string_view::npos) {
      out.append(tmpl.substr(pos, open + 1 - pos));
      pos = open + 1;
      continue;
    }
    const auto it = slots.find(name);
    if (it == slots.end()) throw InvalidArgument("template placeholder {" + std::string(name) + "} has no value");
    out.append(tmpl.substr(pos, open - pos));
    out += it->second;
    pos = close + 1;
  }
  out.append(tmpl.substr(pos));
  return out;
}

}  // namespace thinkmt::resources
