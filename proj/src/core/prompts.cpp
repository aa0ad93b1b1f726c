#include "thinkmt/core/prompts.hpp"

#include "thinkmt/core/error.hpp"
#include "thinkmt/core/text.hpp"

namespace thinkmt {

std::string build_io_prompt(const ParallelRecord& record) {
  const auto& p = record.pair;
  std::string out;
  out.reserve(record.source.size() + 64);
  out += "Translate this from ";
  out += p.src;
  out += " to ";
  out += p.tgt;
  out += ":\n";
  out += p.src;
  out += ": ";
  out += record.source;
  out += "\n";
  out += p.tgt;
  out += ": ";
  return out;
}

std::string build_io_demo(const ParallelRecord& record) { return build_io_prompt(record) + record.target; }

std::string build_instruct_prompt(const ParallelRecord& record) {
  const auto& p = record.pair;
  return "Please write a high-quality " + p.tgt + " translation of the following " + p.src + " sentence\n\n" +
         record.source + "\n\nPlease provide only the translation, nothing more.";
}

std::string format_cot_target(std::string_view trace, std::string_view target) {
  if (trace.empty()) throw InvalidArgument("thinking target: empty trace");
  if (text::trim(target).empty()) throw InvalidArgument("thinking target: empty target");
  if (trace.find(kThinkClose) != std::string_view::npos || trace.find(kThinkOpen) != std::string_view::npos) {
    throw InvalidArgument("thinking target: trace contains a think marker");
  }
  if (target.find(kThinkClose) != std::string_view::npos || target.find(kThinkOpen) != std::string_view::npos) {
    throw InvalidArgument("thinking target: target contains a think marker");
  }
  std::string out;
  out.reserve(trace.size() + target.size() + 48);
  out += kThinkOpen;
  out += '\n';
  out += trace;
  out += '\n';
  out += kThinkClose;
  out += "\n\n";
  out += kFinalTranslationMarker;
  out += '\n';
  out += target;
  return out;
}

std::optional<CotParts> parse_cot_target(std::string_view completion) {
  const auto close = completion.find(kThinkClose);
  if (close == std::string_view::npos) return std::nullopt;
  const auto marker = completion.find(kFinalTranslationMarker, close + kThinkClose.size());
  if (marker == std::string_view::npos) return std::nullopt;

  const auto open = completion.rfind(kThinkOpen, close);
  std::string_view trace =
      open == std::string_view::npos ? completion.substr(0, close) : completion.substr(open + kThinkOpen.size(), close - open - kThinkOpen.size());
  if (trace.starts_with('\n')) trace.remove_prefix(1);
  if (trace.ends_with('\n')) trace.remove_suffix(1);

  auto rest = completion.substr(marker + kFinalTranslationMarker.size());
  if (const auto nl = rest.find('\n'); nl != std::string_view::npos) rest = rest.substr(nl + 1);
  return CotParts{std::string(trace), std::string(text::trim(rest))};
}

}  // namespace thinkmt
