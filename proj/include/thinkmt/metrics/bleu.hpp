#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "thinkmt/metrics/metric.hpp"
#include "thinkmt/metrics/tokenize.hpp"

namespace thinkmt::metrics {

enum class Smoothing { exp, none };

enum class TokenizerKind { thirteen_a, character, external_spm };

struct BleuConfig {
  int max_ngram = 4;
  Smoothing smoothing = Smoothing::exp;
  bool effective_order = false;
  TokenizerKind tokenizer = TokenizerKind::thirteen_a;
  /// Vocabulary file for external_spm.
  std::filesystem::path spm_vocab;
  /// Name shown as `tok:` for external_spm (e.g. "flores200").
  std::string spm_name = "spm";
  bool lowercase = false;
};

/// sacreBLEU-compatible BLEU.
class Bleu final : public CorpusMetric {
public:
  explicit Bleu(BleuConfig cfg = {});

  std::string name() const override { return "BLEU"; }
  /// e.g. `nrefs:1|case:mixed|eff:no|tok:13a|smooth:exp|version:thinkmt-1.0`
  std::string signature() const override;

  /// Layout: [hyp_len, ref_len, correct_1..N, total_1..N].
  SegmentStats segment_stats(std::string_view hyp, std::string_view ref) const override;
  double score_from_stats(std::span<const double> summed) const override;

  const BleuConfig& config() const { return cfg_; }

private:
  BleuConfig cfg_;
  std::shared_ptr<const Tokenizer> tokenizer_;
};

/// Score from BLEU sufficient statistics, mirroring sacreBLEU's compute_bleu.
double compute_bleu(std::span<const double> correct, std::span<const double> total, double sys_len, double ref_len,
                    Smoothing smoothing, bool effective_order);

double corpus_bleu(std::span<const std::string> hyps, std::span<const std::string> refs, const BleuConfig& cfg = {});

/// Sentence BLEU with exponential smoothing and effective order.
double sentence_bleu(std::string_view hyp, std::string_view ref);

}  // namespace thinkmt::metrics
