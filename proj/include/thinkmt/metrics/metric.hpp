#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace thinkmt::metrics {

/// A segment's sufficient statistics. Corpus scores are computed from the
/// element-wise sum of segment statistics, so they are independent of
/// segment order and can be recomputed cheaply on resamples.
using SegmentStats = std::vector<double>;

/// A corpus-level metric decomposed into additive segment statistics.
class CorpusMetric {
public:
  virtual ~CorpusMetric() = default;

  virtual std::string name() const = 0;
  /// sacreBLEU-style reproducibility signature.
  virtual std::string signature() const = 0;
  virtual bool higher_is_better() const { return true; }

  virtual SegmentStats segment_stats(std::string_view hyp, std::string_view ref) const = 0;
  virtual double score_from_stats(std::span<const double> summed) const = 0;

  /// Throws InvalidArgument on size mismatch or empty input.
  std::vector<SegmentStats> corpus_stats(std::span<const std::string> hyps, std::span<const std::string> refs) const;
  double corpus_score(std::span<const std::string> hyps, std::span<const std::string> refs) const;
  double sentence_score(std::string_view hyp, std::string_view ref) const;
};

/// Element-wise sum of a subset of segment statistics.
SegmentStats sum_stats(std::span<const SegmentStats> stats);

/// Corpus score = mean of externally computed segment scores (e.g. neural
/// metrics). Its statistics are {score, 1}.
class MeanMetric final : public CorpusMetric {
public:
  MeanMetric(std::string name, bool higher_is_better) : name_(std::move(name)), higher_(higher_is_better) {}

  std::string name() const override { return name_; }
  std::string signature() const override { return "mean-of-segments"; }
  bool higher_is_better() const override { return higher_; }
  SegmentStats segment_stats(std::string_view, std::string_view) const override;
  double score_from_stats(std::span<const double> summed) const override;

  static SegmentStats stats_for(double segment_score) { return {segment_score, 1.0}; }

private:
  std::string name_;
  bool higher_;
};

}  // namespace thinkmt::metrics
