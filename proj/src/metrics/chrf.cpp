#include "thinkmt/metrics/chrf.hpp"

#include <string>
#include <unordered_map>
#include <vector>

#include "thinkmt/core/error.hpp"
#include "thinkmt/core/text.hpp"
#include "thinkmt/version.hpp"

namespace thinkmt::metrics {

namespace {

using Counts = std::unordered_map<std::string, int>;

constexpr std::string_view kPunctuation = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

bool is_punct(char32_t c) { return c < 0x80 && kPunctuation.find(static_cast<char>(c)) != std::string_view::npos; }

std::string strip_spaces(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (const auto w : text::split_whitespace(s)) out += w;
  return out;
}

void add_char_ngrams(std::string_view line, int max_order, std::vector<Counts>& out) {
  const auto cps = text::decode_utf8(line);
  for (int n = 1; n <= max_order; ++n) {
    Counts counts;
    const auto un = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i + un <= cps.size(); ++i) {
      const auto begin = cps[i].offset;
      const auto end = cps[i + un - 1].offset + cps[i + un - 1].length;
      ++counts[std::string(line.substr(begin, end - begin))];
    }
    out.push_back(std::move(counts));
  }
}

// Separates a single leading or trailing punctuation mark from each word.
std::vector<std::string> split_punctuation(std::string_view sent) {
  std::vector<std::string> out;
  for (const auto w : text::split_whitespace(sent)) {
    const auto cps = text::decode_utf8(w);
    if (cps.size() == 1) {
      out.emplace_back(w);
    } else if (is_punct(cps.back().value)) {
      out.emplace_back(w.substr(0, cps.back().offset));
      out.emplace_back(w.substr(cps.back().offset));
    } else if (is_punct(cps.front().value)) {
      out.emplace_back(w.substr(0, cps.front().length));
      out.emplace_back(w.substr(cps.front().length));
    } else {
      out.emplace_back(w);
    }
  }
  return out;
}

Counts word_ngrams(const std::vector<std::string>& tokens, int n) {
  Counts counts;
  const auto un = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + un <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t k = 1; k < un; ++k) {
      key += ' ';
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

std::vector<Counts> all_ngrams(std::string_view sent, const ChrfConfig& cfg) {
  std::vector<Counts> out;
  out.reserve(static_cast<std::size_t>(cfg.char_order + cfg.word_order));
  if (cfg.whitespace) {
    add_char_ngrams(sent, cfg.char_order, out);
  } else {
    add_char_ngrams(strip_spaces(sent), cfg.char_order, out);
  }
  if (cfg.word_order > 0) {
    const auto words = split_punctuation(sent);
    for (int n = 1; n <= cfg.word_order; ++n) out.push_back(word_ngrams(words, n));
  }
  return out;
}

}  // namespace

std::string Chrf::name() const {
  return "chrF" + std::to_string(cfg_.beta) + std::string(static_cast<std::size_t>(cfg_.word_order), '+');
}

std::string Chrf::signature() const {
  std::string sig = "nrefs:1|case:";
  sig += cfg_.lowercase ? "lc" : "mixed";
  sig += "|eff:";
  sig += cfg_.effective_order ? "yes" : "no";
  sig += "|nc:" + std::to_string(cfg_.char_order);
  sig += "|nw:" + std::to_string(cfg_.word_order);
  sig += "|space:";
  sig += cfg_.whitespace ? "yes" : "no";
  sig += "|version:thinkmt-";
  sig += kVersion;
  return sig;
}

SegmentStats Chrf::segment_stats(std::string_view hyp, std::string_view ref) const {
  const std::string h = cfg_.lowercase ? text::to_lower_ascii(hyp) : std::string(hyp);
  const std::string r = cfg_.lowercase ? text::to_lower_ascii(ref) : std::string(ref);
  const auto hyp_ngrams = all_ngrams(h, cfg_);
  const auto ref_ngrams = all_ngrams(r, cfg_);

  SegmentStats stats;
  stats.reserve(hyp_ngrams.size() * 3);
  for (std::size_t i = 0; i < hyp_ngrams.size(); ++i) {
    double hyp_count = 0.0;
    double match = 0.0;
    double ref_count = 0.0;
    for (const auto& [ng, c] : ref_ngrams[i]) ref_count += c;
    for (const auto& [ng, c] : hyp_ngrams[i]) {
      hyp_count += c;
      if (const auto it = ref_ngrams[i].find(ng); it != ref_ngrams[i].end()) match += std::min(c, it->second);
    }
    // An order without any reference n-gram does not count hypothesis n-grams.
    stats.push_back(ref_ngrams[i].empty() ? 0.0 : hyp_count);
    stats.push_back(ref_count);
    stats.push_back(match);
  }
  return stats;
}

double Chrf::score_from_stats(std::span<const double> stats) const {
  const auto order = static_cast<std::size_t>(cfg_.char_order + cfg_.word_order);
  if (stats.size() != 3 * order) throw InvalidArgument("chrF: malformed statistics");
  constexpr double eps = 1e-16;
  const double factor = static_cast<double>(cfg_.beta) * static_cast<double>(cfg_.beta);
  double score = 0.0;
  double avg_prec = 0.0;
  double avg_rec = 0.0;
  int effective = 0;
  for (std::size_t i = 0; i < order; ++i) {
    const double n_hyp = stats[3 * i];
    const double n_ref = stats[3 * i + 1];
    const double n_match = stats[3 * i + 2];
    const double prec = n_hyp > 0 ? n_match / n_hyp : eps;
    const double rec = n_ref > 0 ? n_match / n_ref : eps;
    const double denom = factor * prec + rec;
    score += denom > 0 ? ((1 + factor) * prec * rec / denom) : eps;
    if (n_hyp > 0 && n_ref > 0) {
      avg_prec += prec;
      avg_rec += rec;
      ++effective;
    }
  }
  if (!cfg_.effective_order) return 100 * score / static_cast<double>(order);
  if (effective == 0) {
    avg_prec = avg_rec = 0.0;
  } else {
    avg_prec /= effective;
    avg_rec /= effective;
  }
  if (avg_prec + avg_rec != 0.0) {
    double f = (1 + factor) * avg_prec * avg_rec;
    f /= (factor * avg_prec) + avg_rec;
    return 100 * f;
  }
  return 0.0;
}

double corpus_chrfpp(std::span<const std::string> hyps, std::span<const std::string> refs, const ChrfConfig& cfg) {
  return Chrf(cfg).corpus_score(hyps, refs);
}

double sentence_chrfpp(std::string_view hyp, std::string_view ref) {
  static const Chrf chrf;
  return chrf.sentence_score(hyp, ref);
}

}  // namespace thinkmt::metrics
