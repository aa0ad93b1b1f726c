#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "thinkmt/core/error.hpp"
#include "thinkmt/core/types.hpp"
#include "thinkmt/gateway/gateway.hpp"

namespace thinkmt::strategies {

/// One prompted step of a multi-step pipeline.
struct StepOutput {
  std::string step_name;
  std::string prompt_used;
  std::string raw_output;
  std::string parsed;

  bool operator==(const StepOutput&) const = default;
};

Json to_json(const StepOutput& s);
StepOutput step_from_json(const Json& j);

class StepFailed : public Error {
public:
  StepFailed(std::string step, const std::string& why)
      : Error("step '" + step + "' failed: " + why), step_(std::move(step)) {}
  const std::string& step_name() const noexcept { return step_; }

private:
  std::string step_;
};

/// Cleans a reply that should hold a single translation. If the model echoed
/// a label ("French:", "Translation:", ...) the text after the last such
/// label is kept; surrounding quotes are stripped.
std::string parse_translation_reply(std::string_view reply, const std::vector<std::string>& labels);

/// Labels a teacher may echo before a translation into `tgt`.
std::vector<std::string> translation_labels(const LangPair& pair);

enum class StepParse { verbatim, translation };

/// Sends `prompt`, records the exchange as a StepOutput. Gateway failures
/// become StepFailed, except BackendUnavailable which propagates. With
/// `require_text`, an empty parsed value also fails.
StepOutput run_step(gateway::Gateway& gw, const gateway::GenerationParams& params, std::string name,
                    const gateway::Prompt& prompt, StepParse parse, const LangPair& pair, bool require_text);

}  // namespace thinkmt::strategies
