#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "thinkmt/core/types.hpp"
#include "thinkmt/gateway/gateway.hpp"
#include "thinkmt/strategies/step.hpp"

namespace thinkmt::strategies {

enum class StrategyKind { maps, sbys, tear, self_refine, comptra };

inline constexpr StrategyKind kAllStrategies[] = {StrategyKind::maps, StrategyKind::sbys, StrategyKind::tear,
                                                  StrategyKind::self_refine, StrategyKind::comptra};

std::string_view to_string(StrategyKind k);
StrategyKind strategy_from_string(std::string_view s);

/// Output of one strategy run over one record.
struct TraceRecord {
  std::string record_id;
  StrategyKind strategy = StrategyKind::maps;
  std::vector<StepOutput> steps;
  std::string trace;
  std::vector<std::string> attempts;
  std::string final_translation;

  bool operator==(const TraceRecord&) const = default;
};

Json to_json(const TraceRecord& t);
TraceRecord trace_record_from_json(const Json& j);

/// Picks the index of the best candidate translation of `record`.
using CandidateChooser = std::function<std::size_t(const ParallelRecord&, const std::vector<std::string>&)>;

struct StrategyOptions {
  int self_refine_rounds = 3;
  int comptra_phrases = 3;
  /// Few-shot examples for TEaR drafting and CompTra phrase translation.
  std::vector<ParallelRecord> demos;
  /// MAPS final selection; the first candidate when unset.
  CandidateChooser chooser;
};

/// Rebuilds the trace text from persisted steps. Pure and byte-stable.
std::string assemble_trace(StrategyKind kind, const LangPair& pair, const std::vector<StepOutput>& steps);

/// Translation attempts embedded in the trace, in trace order.
std::vector<std::string> attempts_from_steps(StrategyKind kind, const std::vector<StepOutput>& steps);

/// Self-Refine trace for candidates[0] (the draft) followed by refinements.
std::string assemble_self_refine(const std::vector<std::string>& candidates);

TraceRecord run_maps(const ParallelRecord& record, gateway::Gateway& gw, const gateway::GenerationParams& params,
                     const StrategyOptions& opts = {});
TraceRecord run_sbys(const ParallelRecord& record, gateway::Gateway& gw, const gateway::GenerationParams& params);
TraceRecord run_tear(const ParallelRecord& record, gateway::Gateway& gw, const gateway::GenerationParams& params,
                     const std::vector<ParallelRecord>& demos);
TraceRecord run_self_refine(const ParallelRecord& record, gateway::Gateway& gw,
                            const gateway::GenerationParams& params, int rounds = 3);
TraceRecord run_comptra(const ParallelRecord& record, gateway::Gateway& gw, const gateway::GenerationParams& params,
                        const std::vector<ParallelRecord>& demos, int n_phrases = 3);

/// Dispatches to the run_* function for `kind`.
TraceRecord run_strategy(StrategyKind kind, const ParallelRecord& record, gateway::Gateway& gw,
                         const gateway::GenerationParams& params, const StrategyOptions& opts = {});

}  // namespace thinkmt::strategies
