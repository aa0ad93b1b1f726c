#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "thinkmt/core/error.hpp"
#include "thinkmt/core/types.hpp"
#include "thinkmt/net/http.hpp"
#include "thinkmt/net/retry.hpp"

namespace thinkmt::scorer {

enum class MetricId { blaser_qe, cometkiwi, metricx_hybrid, bleu_sent, chrfpp_sent };
enum class Polarity { higher_better, lower_better };

std::string_view to_string(MetricId m);
MetricId metric_from_string(std::string_view s);
Polarity polarity(MetricId m);
bool needs_reference(MetricId m);
bool is_native(MetricId m);

struct ScoreRequest {
  std::string source;
  std::string hypothesis;
  std::optional<std::string> reference;
  MetricId metric = MetricId::blaser_qe;

  /// Throws InvalidArgument unless the reference is present exactly when
  /// the metric is reference-based.
  void validate() const;
};

class MetricUnsupported : public Error {
public:
  using Error::Error;
};

class RemoteUnavailable : public Error {
public:
  using Error::Error;
};

/// Scores hypotheses; results follow request order.
class Scorer {
public:
  virtual ~Scorer() = default;
  virtual std::string id() const = 0;
  virtual std::vector<double> score_batch(const std::vector<ScoreRequest>& requests) = 0;
};

/// Sentence BLEU and chrF++ computed in-process.
class NativeScorer : public Scorer {
public:
  std::string id() const override { return "native"; }
  std::vector<double> score_batch(const std::vector<ScoreRequest>& requests) override;
};

struct RemoteConfig {
  std::string base_url = "http://localhost:8008";
  std::size_t batch_size = 64;
  int max_concurrency = 4;
  int timeout_seconds = 300;
  net::RetryPolicy retry;
  /// Part of every cache key; a response reporting another version is
  /// rejected so cached and fresh scores never mix models.
  std::string model_version = "unversioned";
  bool enforce_model_version = false;
  std::optional<std::filesystem::path> cache_dir;

  static RemoteConfig from_json(const Json& j);
};

/// Client of the neural scoring service (POST /score, GET /healthz).
class RemoteScorer : public Scorer {
public:
  explicit RemoteScorer(RemoteConfig cfg);

  std::string id() const override { return "remote:" + cfg_.base_url + "#" + cfg_.model_version; }
  std::vector<double> score_batch(const std::vector<ScoreRequest>& requests) override;

  /// Body of GET /healthz; throws RemoteUnavailable when not 200.
  Json health() const;

  std::size_t remote_calls() const;

  std::string cache_key(const ScoreRequest& r) const;

private:
  std::vector<double> post_batch(MetricId metric, const std::vector<const ScoreRequest*>& batch);
  std::optional<double> cache_get(const std::string& key);
  void cache_put(const std::string& key, double value);

  RemoteConfig cfg_;
  net::HttpClient http_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, double> memory_;
  std::size_t remote_calls_ = 0;
};

/// Deterministic stand-in for neural metrics: the score of a request is a
/// hash of its content mapped into the metric's native range. Native
/// metrics are computed for real.
class MockScorer : public Scorer {
public:
  explicit MockScorer(std::string salt = "") : salt_(std::move(salt)) {}
  std::string id() const override { return "mock:" + salt_; }
  std::vector<double> score_batch(const std::vector<ScoreRequest>& requests) override;

private:
  std::string salt_;
};

/// Wraps a function, for tests and ad-hoc scorers.
class FunctionScorer : public Scorer {
public:
  using Fn = std::function<double(const ScoreRequest&)>;
  explicit FunctionScorer(Fn fn, std::string name = "function") : fn_(std::move(fn)), name_(std::move(name)) {}
  std::string id() const override { return name_; }
  std::vector<double> score_batch(const std::vector<ScoreRequest>& requests) override;

private:
  Fn fn_;
  std::string name_;
};

/// `{"kind": "native" | "mock" | "remote", ...}`.
std::shared_ptr<Scorer> make_scorer(const Json& cfg);

/// Where a selected target came from.
struct Provenance {
  /// Index into the attempt list; empty for the ground truth.
  std::optional<std::size_t> attempt;

  bool is_ground_truth() const { return !attempt.has_value(); }
  std::string to_string() const;
  bool operator==(const Provenance&) const = default;
};

struct ScoredCandidate {
  std::string text;
  double score = 0.0;
  Polarity polarity = Polarity::higher_better;
  Provenance provenance;
};

struct Selection {
  ScoredCandidate winner;
  /// Ground truth first, then attempts in order.
  std::vector<ScoredCandidate> candidates;
};

/// Index of the best score; index 0 is the ground truth. A later candidate
/// wins only when strictly better, so ties go to the ground truth and then
/// to the lowest attempt index. NaN never wins.
std::size_t best_index(const std::vector<double>& scores, Polarity polarity);

/// Scores the ground truth and every attempt against `source` with a
/// reference-free metric and returns the best.
Selection select_best(const std::string& ground_truth, const std::vector<std::string>& attempts,
                      const std::string& source, MetricId metric, Scorer& scorer);

}  // namespace thinkmt::scorer
