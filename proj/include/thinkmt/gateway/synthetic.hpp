#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "thinkmt/gateway/gateway.hpp"

namespace thinkmt::gateway {

/// Offline teacher used by the mock backend. It recognizes every prompt this
/// library sends (strategy steps, decomposition, CoT elicitation, plain
/// translation requests) and answers with well-formed, deterministic text.
/// Translations are pseudo-words derived from the source by hashing, so
/// different steps produce slightly different candidates.
class SyntheticTeacher {
public:
  struct Options {
    std::uint64_t seed = 0;
    /// Source text -> exact reply for plain translation requests.
    std::map<std::string, std::string, std::less<>> oracle;
    /// Answer completion-style prompts in the CoT target format.
    bool cot_completions = false;
  };

  explicit SyntheticTeacher(std::uint64_t seed = 0) { opts_.seed = seed; }
  explicit SyntheticTeacher(Options opts) : opts_(std::move(opts)) {}

  std::string reply(const BackendRequest& request) const;

  /// Deterministic pseudo-translation; variant 0 is the canonical one.
  std::string translate(std::string_view source, std::uint64_t variant) const;

private:
  std::string answer(const BackendRequest& request) const;
  std::uint64_t sampling_salt(const BackendRequest& request) const;

  Options opts_;
};

/// Source sentence of a plain translation prompt (few-shot completion
/// blocks, the instruct prompt or a `Src: text\nTgt:` tail), if any.
std::optional<std::string> translation_query(std::string_view prompt);

}  // namespace thinkmt::gateway
