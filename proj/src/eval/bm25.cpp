#include "thinkmt/eval/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "thinkmt/core/error.hpp"
#include "thinkmt/core/text.hpp"

namespace thinkmt::eval {

Json Bm25Params::to_json() const {
  return Json{{"k1", k1}, {"b", b}, {"idf", "lucene"}, {"tokenizer", "whitespace+lowercase"}};
}

std::vector<std::string> bm25_tokenize(std::string_view s) {
  std::vector<std::string> out;
  for (auto tok : text::split_whitespace(s)) out.push_back(text::to_lower_ascii(tok));
  return out;
}

namespace {

int lookup(const std::vector<std::pair<std::string, int>>& sorted, const std::string& term) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), term,
                                   [](const auto& entry, const std::string& t) { return entry.first < t; });
  return it != sorted.end() && it->first == term ? it->second : 0;
}

}  // namespace

Bm25Index::Bm25Index(const std::vector<ParallelRecord>& pool, Bm25Params params) : params_(params) {
  std::map<std::string, int> df;
  double total = 0.0;
  for (const auto& r : pool) {
    std::map<std::string, int> tf;
    const auto tokens = bm25_tokenize(r.source);
    for (const auto& t : tokens) ++tf[t];
    for (const auto& [t, _] : tf) ++df[t];
    docs_.push_back({{tf.begin(), tf.end()}, static_cast<double>(tokens.size())});
    total += static_cast<double>(tokens.size());
  }
  df_.assign(df.begin(), df.end());
  avg_length_ = docs_.empty() ? 0.0 : total / static_cast<double>(docs_.size());
}

std::vector<double> Bm25Index::scores(std::string_view query) const {
  const auto tokens = bm25_tokenize(query);
  const std::set<std::string> terms(tokens.begin(), tokens.end());
  const double n = static_cast<double>(docs_.size());
  std::vector<double> out(docs_.size(), 0.0);
  for (const auto& term : terms) {
    const int df = lookup(df_, term);
    if (df == 0) continue;
    const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    for (std::size_t d = 0; d < docs_.size(); ++d) {
      const double tf = lookup(docs_[d].tf, term);
      if (tf == 0) continue;
      const double norm = avg_length_ > 0 ? docs_[d].length / avg_length_ : 0.0;
      out[d] += idf * tf * (params_.k1 + 1.0) / (tf + params_.k1 * (1.0 - params_.b + params_.b * norm));
    }
  }
  return out;
}

std::vector<std::size_t> Bm25Index::top_k(std::string_view query, std::size_t k) const {
  const auto s = scores(query);
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

std::vector<ParallelRecord> bm25_retrieve(std::string_view query, const std::vector<ParallelRecord>& pool,
                                          std::size_t k, Bm25Params params) {
  if (k == 0) return {};
  if (pool.empty()) throw InvalidArgument("bm25: empty demonstration pool");
  if (k > pool.size())
    throw InvalidArgument("bm25: k=" + std::to_string(k) + " exceeds pool size " + std::to_string(pool.size()));
  const Bm25Index index(pool, params);
  std::vector<ParallelRecord> out;
  for (auto i : index.top_k(query, k)) out.push_back(pool[i]);
  return out;
}

}  // namespace thinkmt::eval
