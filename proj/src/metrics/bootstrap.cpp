#include "thinkmt/metrics/bootstrap.hpp"

#include <random>

#include "thinkmt/core/error.hpp"

namespace thinkmt::metrics {

void SignificanceConfig::validate() const {
  if (n_resamples < 1) throw InvalidArgument("significance: n_resamples must be >= 1");
  if (sample_size < 1) throw InvalidArgument("significance: sample_size must be >= 1");
  if (!(p_threshold > 0.0 && p_threshold < 1.0)) throw InvalidArgument("significance: p threshold must be in (0, 1)");
}

std::uint64_t resample_seed(std::uint64_t seed, std::uint64_t draw) {
  // splitmix64 finalizer over (seed, draw)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (draw + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<std::size_t> resample_indices(std::uint64_t seed, std::uint64_t draw, std::size_t n_segments,
                                          std::size_t sample_size) {
  if (n_segments == 0) throw InvalidArgument("significance: no segments to resample");
  std::mt19937_64 engine(resample_seed(seed, draw));
  std::vector<std::size_t> idx(sample_size);
  for (auto& i : idx) i = static_cast<std::size_t>(engine() % n_segments);
  return idx;
}

SignificanceResult paired_bootstrap(std::span<const SegmentStats> stats_a, std::span<const SegmentStats> stats_b,
                                    const CorpusMetric& metric, const SignificanceConfig& cfg) {
  cfg.validate();
  if (stats_a.empty() || stats_b.empty()) throw InvalidArgument("significance: empty system outputs");
  if (stats_a.size() != stats_b.size()) throw InvalidArgument("significance: systems have different segment counts");

  SignificanceResult result;
  result.score_a = metric.score_from_stats(sum_stats(stats_a));
  result.score_b = metric.score_from_stats(sum_stats(stats_b));

  const std::size_t width_a = stats_a.front().size();
  const std::size_t width_b = stats_b.front().size();
  SegmentStats sum_a(width_a);
  SegmentStats sum_b(width_b);
  for (int draw = 0; draw < cfg.n_resamples; ++draw) {
    const auto idx = resample_indices(cfg.seed, static_cast<std::uint64_t>(draw), stats_a.size(),
                                      static_cast<std::size_t>(cfg.sample_size));
    std::fill(sum_a.begin(), sum_a.end(), 0.0);
    std::fill(sum_b.begin(), sum_b.end(), 0.0);
    for (const auto i : idx) {
      for (std::size_t k = 0; k < width_a; ++k) sum_a[k] += stats_a[i][k];
      for (std::size_t k = 0; k < width_b; ++k) sum_b[k] += stats_b[i][k];
    }
    const double a = metric.score_from_stats(sum_a);
    const double b = metric.score_from_stats(sum_b);
    const bool b_better = metric.higher_is_better() ? b > a : b < a;
    if (b_better) ++result.b_wins;
  }
  result.p_value = static_cast<double>(cfg.n_resamples - result.b_wins) / static_cast<double>(cfg.n_resamples);
  result.significant = result.p_value < cfg.p_threshold;
  return result;
}

}  // namespace thinkmt::metrics
