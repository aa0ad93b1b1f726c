#include "thinkmt/metrics/metric.hpp"

#include "thinkmt/core/error.hpp"

namespace thinkmt::metrics {

std::vector<SegmentStats> CorpusMetric::corpus_stats(std::span<const std::string> hyps,
                                                     std::span<const std::string> refs) const {
  if (hyps.size() != refs.size()) {
    throw InvalidArgument(name() + ": " + std::to_string(hyps.size()) + " hypotheses vs " +
                          std::to_string(refs.size()) + " references");
  }
  if (hyps.empty()) throw InvalidArgument(name() + ": empty corpus");
  std::vector<SegmentStats> out;
  out.reserve(hyps.size());
  for (std::size_t i = 0; i < hyps.size(); ++i) out.push_back(segment_stats(hyps[i], refs[i]));
  return out;
}

double CorpusMetric::corpus_score(std::span<const std::string> hyps, std::span<const std::string> refs) const {
  const auto stats = corpus_stats(hyps, refs);
  const auto summed = sum_stats(stats);
  return score_from_stats(summed);
}

double CorpusMetric::sentence_score(std::string_view hyp, std::string_view ref) const {
  const auto stats = segment_stats(hyp, ref);
  return score_from_stats(stats);
}

SegmentStats sum_stats(std::span<const SegmentStats> stats) {
  if (stats.empty()) return {};
  SegmentStats total(stats.front().size(), 0.0);
  for (const auto& s : stats) {
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += s[i];
  }
  return total;
}

SegmentStats MeanMetric::segment_stats(std::string_view, std::string_view) const {
  throw InvalidArgument(name_ + ": segment scores come from an external scorer");
}

double MeanMetric::score_from_stats(std::span<const double> summed) const {
  if (summed.size() != 2 || summed[1] <= 0.0) return 0.0;
  return summed[0] / summed[1];
}

}  // namespace thinkmt::metrics
