#pragma once

#include <span>
#include <string>

#include "thinkmt/metrics/metric.hpp"

namespace thinkmt::metrics {

struct ChrfConfig {
  int char_order = 6;
  int word_order = 2;
  int beta = 2;
  bool whitespace = false;
  /// true: sacreBLEU 2.x effective-order averaging; false: epsilon smoothing.
  bool effective_order = true;
  bool lowercase = false;
};

/// sacreBLEU-compatible chrF / chrF++ (word_order = 2).
class Chrf final : public CorpusMetric {
public:
  explicit Chrf(ChrfConfig cfg = {}) : cfg_(cfg) {}

  std::string name() const override;
  /// e.g. `nrefs:1|case:mixed|eff:yes|nc:6|nw:2|space:no|version:thinkmt-1.0`
  std::string signature() const override;

  /// Layout: [hyp, ref, match] per order, character orders first.
  SegmentStats segment_stats(std::string_view hyp, std::string_view ref) const override;
  double score_from_stats(std::span<const double> summed) const override;

  const ChrfConfig& config() const { return cfg_; }

private:
  ChrfConfig cfg_;
};

double corpus_chrfpp(std::span<const std::string> hyps, std::span<const std::string> refs, const ChrfConfig& cfg = {});
double sentence_chrfpp(std::string_view hyp, std::string_view ref);

}  // namespace thinkmt::metrics
