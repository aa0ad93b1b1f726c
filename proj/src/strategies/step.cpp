#include "thinkmt/strategies/step.hpp"

#include "thinkmt/core/text.hpp"
#include "thinkmt/gateway/backends.hpp"

namespace thinkmt::strategies {

Json to_json(const StepOutput& s) {
  return Json{{"step_name", s.step_name}, {"prompt_used", s.prompt_used}, {"raw_output", s.raw_output}, {"parsed", s.parsed}};
}

StepOutput step_from_json(const Json& j) {
  return StepOutput{j.at("step_name").get<std::string>(), j.at("prompt_used").get<std::string>(),
                    j.at("raw_output").get<std::string>(), j.at("parsed").get<std::string>()};
}

std::vector<std::string> translation_labels(const LangPair& pair) {
  return {pair.tgt + " translation", pair.tgt, "Translation", "Final translation", "Refined translation",
          "Improved translation"};
}

namespace {

bool iequals_ascii(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    char x = a[i], y = b[i];
    if (x >= 'A' && x <= 'Z') x = static_cast<char>(x - 'A' + 'a');
    if (y >= 'A' && y <= 'Z') y = static_cast<char>(y - 'A' + 'a');
    if (x != y) return false;
  }
  return true;
}

}  // namespace

std::string parse_translation_reply(std::string_view reply, const std::vector<std::string>& labels) {
  std::string_view body = text::trim(reply);
  const auto lines = text::split_lines(body);
  for (std::size_t i = lines.size(); i-- > 0;) {
    std::string_view line = text::trim(lines[i]);
    for (char c : {'*', '#'}) {
      while (!line.empty() && line.front() == c) line.remove_prefix(1);
    }
    line = text::trim(line);
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    std::string_view label = text::trim(line.substr(0, colon));
    while (!label.empty() && label.back() == '*') label.remove_suffix(1);
    bool known = false;
    for (const auto& l : labels) known = known || iequals_ascii(label, l);
    if (!known) continue;
    std::string rest(text::trim(line.substr(colon + 1)));
    while (!rest.empty() && rest.front() == '*') rest.erase(0, 1);
    for (std::size_t k = i + 1; k < lines.size(); ++k) {
      rest += '\n';
      rest += lines[k];
    }
    std::string cleaned(text::trim(rest));
    return std::string(text::trim(text::strip_wrapping_quotes(cleaned)));
  }
  return std::string(text::trim(text::strip_wrapping_quotes(body)));
}

StepOutput run_step(gateway::Gateway& gw, const gateway::GenerationParams& params, std::string name,
                    const gateway::Prompt& prompt, StepParse parse, const LangPair& pair, bool require_text) {
  StepOutput out;
  out.step_name = std::move(name);
  out.prompt_used = gateway::prompt_text(prompt);
  gateway::GenerationResult result;
  try {
    result = gw.generate(prompt, params);
  } catch (const gateway::BackendUnavailable&) {
    throw;
  } catch (const Error& e) {
    throw StepFailed(out.step_name, e.what());
  }
  out.raw_output = result.raw;
  if (result.truncated_thinking) throw StepFailed(out.step_name, "thinking budget exhausted without an answer");
  out.parsed = parse == StepParse::translation ? parse_translation_reply(result.answer, translation_labels(pair))
                                               : std::string(text::trim(result.answer));
  if (require_text && out.parsed.empty()) throw StepFailed(out.step_name, "empty reply");
  return out;
}

}  // namespace thinkmt::strategies
