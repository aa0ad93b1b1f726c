#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "thinkmt/core/error.hpp"
#include "thinkmt/core/types.hpp"
#include "thinkmt/eval/bm25.hpp"
#include "thinkmt/gateway/gateway.hpp"
#include "thinkmt/metrics/bleu.hpp"
#include "thinkmt/metrics/bootstrap.hpp"
#include "thinkmt/scorer/scorer.hpp"

namespace thinkmt::eval {

// ---- benchmarks -----------------------------------------------------------

/// One-sentence-per-line parallel files. Ids are `{name}:{line}` (1-based).
/// `limit` keeps only the first lines (e.g. NTREX first-1000).
ParallelDataset load_benchmark_text(const std::filesystem::path& source_file,
                                    const std::filesystem::path& reference_file, const LangPair& pair,
                                    const std::string& name, std::optional<std::size_t> limit = std::nullopt);

/// JSONL with `source` and `target` (or `reference`) fields and an optional
/// `id`. Language metadata comes from `pair`, never from the file.
ParallelDataset load_benchmark_jsonl(const std::filesystem::path& file, const LangPair& pair, const std::string& name,
                                     std::optional<std::size_t> limit = std::nullopt);

// ---- prompts --------------------------------------------------------------

/// Base and fine-tuned kinds: the completed demo blocks followed by the open
/// block, as a raw completion prompt. Instruct and thinking kinds: the demo
/// blocks above the instruct request, as one user message.
gateway::Prompt build_eval_prompt(const ParallelRecord& record, const std::vector<ParallelRecord>& demos,
                                  gateway::ModelKind kind);

// ---- configuration --------------------------------------------------------

enum class ThinkingSetting { on, off, both, not_applicable };

std::string_view to_string(ThinkingSetting t);
ThinkingSetting thinking_setting_from_string(std::string_view s);

struct EvalConfig {
  std::string benchmark;
  LangPair pair;
  int shots = 0;
  std::optional<std::vector<ParallelRecord>> pool;
  /// Defaults to `on` for thinking models and `n/a` for the others.
  std::optional<ThinkingSetting> thinking;
  gateway::GenerationParams params;
  gateway::ModelKind model_kind = gateway::ModelKind::instruct;
  metrics::TokenizerKind bleu_tokenizer = metrics::TokenizerKind::thirteen_a;
  std::filesystem::path spm_vocab;
  std::string spm_name = "spm";
  /// Remote (neural) metrics scored in addition to BLEU and chrF++.
  std::vector<scorer::MetricId> remote_metrics;
  metrics::SignificanceConfig significance;
  Bm25Params bm25;
  double max_failure_rate = 0.1;
  int workers = 8;

  ThinkingSetting effective_thinking() const;
  /// Throws InvalidArgument on an inconsistent configuration.
  void validate() const;
  Json to_json() const;
};

// ---- reports --------------------------------------------------------------

struct SegmentResult {
  std::string id;
  std::string source;
  std::string reference;
  std::string hypothesis;
  /// Subset of: failed, empty_hypothesis, truncated_thinking.
  std::vector<std::string> flags;
  Json prompt;
  std::optional<std::string> thinking_part;
  std::map<std::string, double> scores;

  bool has_flag(std::string_view f) const;
};

struct MetricValue {
  std::string name;
  std::string signature;
  double value = 0.0;
  bool higher_is_better = true;
};

struct RunReport {
  /// "on", "off" or "n/a".
  std::string mode;
  std::vector<SegmentResult> segments;
  std::vector<MetricValue> metrics;
  std::size_t failed = 0;

  const MetricValue* metric(std::string_view name) const;
};

struct Verdict {
  std::string metric;
  std::string signature;
  std::string system_a;
  std::string system_b;
  double score_a = 0.0;
  double score_b = 0.0;
  /// p for "B beats A" and for "A beats B".
  double p_b_over_a = 1.0;
  double p_a_over_b = 1.0;
  /// "a", "b" or "ns".
  std::string significant;
  /// Strictly better corpus score; neither on a tie.
  bool bold_a = false;
  bool bold_b = false;
};

struct EvalReport {
  Json manifest = Json::object();
  std::vector<RunReport> runs;
  std::vector<Verdict> verdicts;
};

/// More than the configured share of segments failed. The partial report is
/// attached so it can still be persisted.
class TooManyFailures : public Error {
public:
  TooManyFailures(std::string what, EvalReport report) : Error(std::move(what)), report_(std::move(report)) {}
  const EvalReport& report() const { return report_; }

private:
  EvalReport report_;
};

class ReportInconsistent : public Error {
public:
  using Error::Error;
};

/// Native corpus metrics of a configuration: BLEU, then chrF++.
std::vector<std::unique_ptr<metrics::CorpusMetric>> native_metrics(const EvalConfig& cfg);

/// Generates, extracts and scores every segment of `benchmark` under each
/// configured thinking mode, and runs the paired bootstrap between the two
/// modes when thinking is `both` (A = off, B = on). Failed segments are
/// scored as empty and flagged.
EvalReport run_eval(const EvalConfig& cfg, const ParallelDataset& benchmark, gateway::Gateway& gw,
                    scorer::Scorer* remote = nullptr);

/// Paired significance for every metric the two runs share. Throws
/// InvalidArgument when the runs cover different segments.
std::vector<Verdict> compare_runs(const RunReport& a, const RunReport& b, const metrics::SignificanceConfig& cfg,
                                  const std::vector<std::unique_ptr<metrics::CorpusMetric>>& native);

/// Metrics of a run recomputed from its segments.
std::vector<MetricValue> recompute_metrics(const RunReport& run,
                                           const std::vector<std::unique_ptr<metrics::CorpusMetric>>& native);

/// `segments.jsonl`, `summary.json` and `summary.txt` under `dir`.
void save_report(const std::filesystem::path& dir, const EvalReport& report);
/// Loads a saved report and checks that every stored metric recomputes from
/// the stored segments. Throws ReportInconsistent otherwise.
EvalReport load_report(const std::filesystem::path& dir);

/// Native metrics matching the configuration stored in a report.
std::vector<std::unique_ptr<metrics::CorpusMetric>> report_metrics(const EvalReport& report);

/// Fixed-width table: metric, signature, one value column per run, verdicts.
std::string format_summary(const EvalReport& report);
std::string format_verdicts(const std::vector<Verdict>& verdicts);

Json to_json(const SegmentResult& s, const std::string& mode);
Json to_json(const Verdict& v);
Verdict verdict_from_json(const Json& j);

}  // namespace thinkmt::eval
