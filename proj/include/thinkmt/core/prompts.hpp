#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "thinkmt/core/types.hpp"

namespace thinkmt {

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kFinalTranslationMarker = "Final Translation";

/// Completion-style prompt used for base and fine-tuned models:
///
///     Translate this from {src} to {tgt}:
///     {src}: {source}
///     {tgt}: 
///
/// The source is inserted verbatim; no quotes are added.
std::string build_io_prompt(const ParallelRecord& record);

/// Same block with the target filled in (a completed few-shot demonstration).
std::string build_io_demo(const ParallelRecord& record);

/// Prompt used for instruction-following and thinking models.
std::string build_instruct_prompt(const ParallelRecord& record);

/// `<think>\n{trace}\n</think>\n\nFinal Translation\n{target}`.
/// Throws InvalidArgument on empty parts or a trace containing `</think>`.
std::string format_cot_target(std::string_view trace, std::string_view target);

struct CotParts {
  std::string trace;
  std::string target;

  bool operator==(const CotParts&) const = default;
};

/// Inverse of format_cot_target. Returns nullopt (no match) when the
/// `</think>` or `Final Translation` marker is absent.
std::optional<CotParts> parse_cot_target(std::string_view completion);

}  // namespace thinkmt
