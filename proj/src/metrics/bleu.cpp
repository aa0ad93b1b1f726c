#include "thinkmt/metrics/bleu.hpp"

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "thinkmt/core/error.hpp"
#include "thinkmt/core/text.hpp"
#include "thinkmt/version.hpp"

namespace thinkmt::metrics {

namespace {

using NgramCounts = std::unordered_map<std::string, int>;

// Counts per order, index 0 = unigrams.
std::vector<NgramCounts> extract_ngrams(const std::vector<std::string_view>& tokens, int max_order) {
  std::vector<NgramCounts> out(static_cast<std::size_t>(max_order));
  for (int n = 1; n <= max_order; ++n) {
    if (tokens.size() < static_cast<std::size_t>(n)) break;
    auto& counts = out[static_cast<std::size_t>(n - 1)];
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
      std::string key(tokens[i]);
      for (int k = 1; k < n; ++k) {
        key += ' ';
        key += tokens[i + static_cast<std::size_t>(k)];
      }
      ++counts[key];
    }
  }
  return out;
}

double floored_log(double x) { return x == 0.0 ? -9999999999.0 : std::log(x); }

}  // namespace

Bleu::Bleu(BleuConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.max_ngram < 1) throw InvalidArgument("BLEU: max n-gram order must be positive");
  switch (cfg_.tokenizer) {
    case TokenizerKind::thirteen_a:
      tokenizer_ = std::make_shared<Tokenizer13a>();
      break;
    case TokenizerKind::character:
      tokenizer_ = std::make_shared<TokenizerChar>();
      break;
    case TokenizerKind::external_spm:
      tokenizer_ = std::make_shared<TokenizerSpmVocab>(cfg_.spm_vocab, cfg_.spm_name);
      break;
  }
}

std::string Bleu::signature() const {
  std::string sig = "nrefs:1|case:";
  sig += cfg_.lowercase ? "lc" : "mixed";
  sig += "|eff:";
  sig += cfg_.effective_order ? "yes" : "no";
  sig += "|tok:" + tokenizer_->signature();
  sig += "|smooth:";
  sig += cfg_.smoothing == Smoothing::exp ? "exp" : "none";
  sig += "|version:thinkmt-";
  sig += kVersion;
  return sig;
}

SegmentStats Bleu::segment_stats(std::string_view hyp, std::string_view ref) const {
  auto prep = [&](std::string_view s) {
    auto t = tokenizer_->tokenize(text::rtrim(s));
    return cfg_.lowercase ? text::to_lower_ascii(t) : t;
  };
  const auto hyp_tok = prep(hyp);
  const auto ref_tok = prep(ref);
  const auto hyp_words = text::split_whitespace(hyp_tok);
  const auto ref_words = text::split_whitespace(ref_tok);
  const auto hyp_ngrams = extract_ngrams(hyp_words, cfg_.max_ngram);
  const auto ref_ngrams = extract_ngrams(ref_words, cfg_.max_ngram);

  const auto order = static_cast<std::size_t>(cfg_.max_ngram);
  SegmentStats stats(2 + 2 * order, 0.0);
  stats[0] = static_cast<double>(hyp_words.size());
  stats[1] = static_cast<double>(ref_words.size());
  for (std::size_t n = 0; n < order; ++n) {
    double correct = 0.0;
    double total = 0.0;
    for (const auto& [ngram, count] : hyp_ngrams[n]) {
      total += count;
      if (const auto it = ref_ngrams[n].find(ngram); it != ref_ngrams[n].end()) {
        correct += std::min(count, it->second);
      }
    }
    stats[2 + n] = correct;
    stats[2 + order + n] = total;
  }
  return stats;
}

double Bleu::score_from_stats(std::span<const double> summed) const {
  const auto order = static_cast<std::size_t>(cfg_.max_ngram);
  if (summed.size() != 2 + 2 * order) throw InvalidArgument("BLEU: malformed statistics");
  return compute_bleu(summed.subspan(2, order), summed.subspan(2 + order, order), summed[0], summed[1],
                      cfg_.smoothing, cfg_.effective_order);
}

double compute_bleu(std::span<const double> correct, std::span<const double> total, double sys_len, double ref_len,
                    Smoothing smoothing, bool effective_order) {
  const std::size_t order = correct.size();
  double bp = 1.0;
  if (sys_len < ref_len) bp = sys_len > 0 ? std::exp(1.0 - ref_len / sys_len) : 0.0;

  bool any_correct = false;
  for (const double c : correct) any_correct = any_correct || c != 0.0;
  if (!any_correct) return 0.0;

  std::vector<double> precisions(order, 0.0);
  double smooth_mteval = 1.0;
  std::size_t eff_order = order;
  for (std::size_t n = 1; n <= order; ++n) {
    if (total[n - 1] == 0.0) break;
    if (effective_order) eff_order = n;
    if (correct[n - 1] == 0.0) {
      if (smoothing == Smoothing::exp) {
        smooth_mteval *= 2.0;
        precisions[n - 1] = 100.0 / (smooth_mteval * total[n - 1]);
      }
    } else {
      precisions[n - 1] = 100.0 * correct[n - 1] / total[n - 1];
    }
  }
  double log_sum = 0.0;
  for (std::size_t i = 0; i < eff_order; ++i) log_sum += floored_log(precisions[i]);
  return bp * std::exp(log_sum / static_cast<double>(eff_order));
}

double corpus_bleu(std::span<const std::string> hyps, std::span<const std::string> refs, const BleuConfig& cfg) {
  return Bleu(cfg).corpus_score(hyps, refs);
}

double sentence_bleu(std::string_view hyp, std::string_view ref) {
  static const Bleu bleu([] {
    BleuConfig cfg;
    cfg.effective_order = true;
    return cfg;
  }());
  return bleu.sentence_score(hyp, ref);
}

}  // namespace thinkmt::metrics
