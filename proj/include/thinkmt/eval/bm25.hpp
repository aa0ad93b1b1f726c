#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "thinkmt/core/types.hpp"

namespace thinkmt::eval {

struct Bm25Params {
  double k1 = 1.5;
  double b = 0.75;

  Json to_json() const;
};

/// Lowercased whitespace tokens. Lowercasing is ASCII-only.
std::vector<std::string> bm25_tokenize(std::string_view text);

/// BM25 index over the source side of a pool. Scores use the Lucene IDF
/// ln(1 + (N - df + 0.5) / (df + 0.5)) and count each distinct query term
/// once.
class Bm25Index {
public:
  explicit Bm25Index(const std::vector<ParallelRecord>& pool, Bm25Params params = {});

  std::vector<double> scores(std::string_view query) const;
  /// Indices of the top-k documents by descending score; ties keep pool order.
  std::vector<std::size_t> top_k(std::string_view query, std::size_t k) const;

  std::size_t size() const { return docs_.size(); }

private:
  struct Doc {
    std::vector<std::pair<std::string, int>> tf;  // sorted by term
    double length = 0.0;
  };
  Bm25Params params_;
  std::vector<Doc> docs_;
  std::vector<std::pair<std::string, int>> df_;  // sorted by term
  double avg_length_ = 0.0;
};

/// Top-k pool records for `query`. Throws InvalidArgument when the pool is
/// empty or k exceeds it.
std::vector<ParallelRecord> bm25_retrieve(std::string_view query, const std::vector<ParallelRecord>& pool,
                                          std::size_t k, Bm25Params params = {});

}  // namespace thinkmt::eval
