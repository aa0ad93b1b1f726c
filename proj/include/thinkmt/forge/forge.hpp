#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "thinkmt/core/types.hpp"
#include "thinkmt/decompose/decompose.hpp"
#include "thinkmt/scorer/scorer.hpp"
#include "thinkmt/strategies/strategies.hpp"

namespace thinkmt::forge {

enum class Condition { ioft, cotft, ioft_max, cotft_max, ioft_boa, ioft_ext };

std::string_view to_string(Condition c);
Condition condition_from_string(std::string_view s);

/// What to build. `trace_source` names a CoT template (T1..T6), a strategy
/// (MAPS, SBYS, TEaR, SelfRefine, CompTra) or a decomposition kind
/// (P, SP, H, CompTraPhrases).
struct BuildPlan {
  Condition condition = Condition::ioft;
  std::optional<std::string> trace_source;
  scorer::MetricId selection_metric = scorer::MetricId::blaser_qe;
  std::vector<strategies::StrategyKind> strategy_set;
  std::optional<decompose::DecompKind> decomp;

  /// Throws InvalidArgument when the inputs required by the condition are
  /// missing.
  void validate() const;
  Json to_json() const;
};

/// Plain source -> target rows.
TrainingDataset build_ioft(const ParallelDataset& d);

/// Rows whose completion is `<think>` trace + target. Records without a
/// trace are dropped and counted in the manifest.
TrainingDataset build_cotft(const ParallelDataset& d, const std::map<std::string, std::string>& traces,
                            const BuildPlan& plan);

/// IOFT with each target replaced by the best of {ground truth} and the
/// attempts embedded in the record's trace.
TrainingDataset build_ioft_max(const ParallelDataset& d, const std::vector<strategies::TraceRecord>& traces,
                               scorer::Scorer& scorer, const BuildPlan& plan);

/// CoTFT with the selected target after the trace.
TrainingDataset build_cotft_max(const ParallelDataset& d, const std::vector<strategies::TraceRecord>& traces,
                                scorer::Scorer& scorer, const BuildPlan& plan);

/// IOFT whose target is the best over the ground truth and the union of all
/// strategies' attempts, scored jointly.
TrainingDataset build_ioft_boa(const ParallelDataset& d,
                               const std::map<strategies::StrategyKind, std::vector<strategies::TraceRecord>>& traces,
                               scorer::Scorer& scorer, const BuildPlan& plan);

/// IOFT rows followed by one row per auxiliary pair, grouped by parent.
TrainingDataset build_ioft_ext(const ParallelDataset& d, const std::vector<decompose::AuxPair>& aux,
                               const BuildPlan& plan);

/// Id of the `index`-th (1-based) auxiliary row of `parent_id`.
std::string aux_row_id(const std::string& parent_id, decompose::DecompKind kind, std::size_t index);

/// Count of rows per `meta.provenance` value.
std::map<std::string, std::size_t> provenance_histogram(const TrainingDataset& d);

}  // namespace thinkmt::forge
