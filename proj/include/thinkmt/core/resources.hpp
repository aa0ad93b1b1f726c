#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

// Prompt and trace templates compiled into the library from resources/.
namespace thinkmt::resources {

/// Raw bytes of a resource, e.g. get("traces/maps.txt").
/// Throws InvalidArgument for an unknown name.
std::string_view get(std::string_view name);

std::vector<std::string_view> names();

using Slots = std::map<std::string, std::string, std::less<>>;

/// Replaces every `{name}` in `tmpl` with slots[name]. Substitution is one
/// pass over the template, so slot values may contain braces. `{}` is left
/// untouched. An unknown placeholder throws InvalidArgument.
std::string render(std::string_view tmpl, const Slots& slots);

namespace detail {
struct Entry {
  std::string_view name;
  std::string_view data;
};
const std::vector<Entry>& table();
}  // namespace detail

}  // namespace thinkmt::resources
