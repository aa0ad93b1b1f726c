#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "thinkmt/metrics/metric.hpp"

namespace thinkmt::metrics {

struct SignificanceConfig {
  int n_resamples = 300;
  int sample_size = 500;
  double p_threshold = 0.05;
  std::uint64_t seed = 1234;

  void validate() const;
};

struct SignificanceResult {
  /// Fraction of resamples in which system B does not strictly beat A.
  double p_value = 1.0;
  bool significant = false;
  double score_a = 0.0;
  double score_b = 0.0;
  int b_wins = 0;
};

/// Seed of the engine used for resample `draw`.
std::uint64_t resample_seed(std::uint64_t seed, std::uint64_t draw);

/// The segment indices of resample `draw`: `sample_size` indices drawn
/// uniformly with replacement from [0, n_segments). Each draw owns an
/// independent std::mt19937_64 seeded with resample_seed(seed, draw), and
/// index k is `engine() % n_segments`.
std::vector<std::size_t> resample_indices(std::uint64_t seed, std::uint64_t draw, std::size_t n_segments,
                                          std::size_t sample_size);

/// One-sided paired bootstrap: is system B better than system A?
/// Both statistic lists must be aligned by segment. For each resample the
/// corpus metric is recomputed for both systems; ties count against B.
/// Throws InvalidArgument on empty or misaligned input.
SignificanceResult paired_bootstrap(std::span<const SegmentStats> stats_a, std::span<const SegmentStats> stats_b,
                                    const CorpusMetric& metric, const SignificanceConfig& cfg = {});

}  // namespace thinkmt::metrics
