#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "thinkmt/core/error.hpp"
#include "thinkmt/core/types.hpp"
#include "thinkmt/gateway/gateway.hpp"
#include "thinkmt/strategies/step.hpp"

namespace thinkmt::decompose {

enum class DecompKind { paraphrases, syntactic, hard, comptra_phrases };

std::string_view to_string(DecompKind k);
DecompKind decomp_kind_from_string(std::string_view s);

/// An auxiliary (segment, translation) pair derived from a parent record.
struct AuxPair {
  std::string text;
  std::string translation;
  DecompKind origin = DecompKind::paraphrases;
  std::string parent_id;

  bool operator==(const AuxPair&) const = default;
};

Json to_json(const AuxPair& p);
AuxPair aux_pair_from_json(const Json& j);

class ListParseError : public Error {
public:
  using Error::Error;
};

/// Items of an enumerated reply. Accepts `1.`, `1)` and `-`/`*`/`•` bullets;
/// strips wrapping quotes and drops empty items. Lines outside the
/// enumeration are ignored. Returns an empty list when nothing is enumerated.
std::vector<std::string> parse_numbered_list(std::string_view reply);

struct DecomposeOptions {
  /// Exact count for P and SP.
  int paraphrase_count = 5;
  /// Upper bound for H.
  int hard_cap = 5;
  /// Upper bound for CompTra phrases.
  int n_phrases = 3;
};

/// Asks the teacher for source-language segments of `kind`. P/SP yield
/// exactly `paraphrase_count` segments (extra items are dropped); H and
/// CompTra phrases are capped. One reprompt on an unparsable or short reply,
/// then ListParseError. A single-word source is its own only CompTra phrase.
std::vector<std::string> decompose(const ParallelRecord& record, DecompKind kind, gateway::Gateway& gw,
                                   const gateway::GenerationParams& params, const DecomposeOptions& opts = {},
                                   std::vector<strategies::StepOutput>* steps = nullptr);

/// Few-shot prompt translating `segment` with `demos` as solved examples.
gateway::Prompt few_shot_prompt(std::string_view segment, const LangPair& pair,
                                const std::vector<ParallelRecord>& demos);

/// Translates each segment few-shot, in order. Empty segments are skipped
/// before any call; segments whose call fails are dropped with a warning.
std::vector<AuxPair> translate_aux(const std::vector<std::string>& segments, const ParallelRecord& record,
                                   DecompKind origin, gateway::Gateway& gw, const gateway::GenerationParams& params,
                                   const std::vector<ParallelRecord>& demos,
                                   std::vector<strategies::StepOutput>* steps = nullptr);

/// Numbered `{i}. {src} Sentence\n{text}\n{tgt} Translation\n{translation}`
/// blocks separated by blank lines.
std::string pairs_to_trace(const std::vector<AuxPair>& pairs, const LangPair& pair);

/// Inverse of pairs_to_trace; nullopt when the text does not have that shape.
/// Returned pairs carry only text and translation.
std::optional<std::vector<AuxPair>> trace_to_pairs(std::string_view trace, const LangPair& pair);

}  // namespace thinkmt::decompose
