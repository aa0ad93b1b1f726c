#include "thinkmt/scorer/scorer.hpp"

#include <cmath>
#include <algorithm>

#include "thinkmt/core/hash.hpp"
#include "thinkmt/core/jsonl.hpp"
#include "thinkmt/gateway/gateway.hpp"
#include "thinkmt/metrics/bleu.hpp"
#include "thinkmt/metrics/chrf.hpp"

namespace thinkmt::scorer {

std::string_view to_string(MetricId m) {
  switch (m) {
    case MetricId::blaser_qe: return "blaser_qe";
    case MetricId::cometkiwi: return "cometkiwi";
    case MetricId::metricx_hybrid: return "metricx_hybrid";
    case MetricId::bleu_sent: return "bleu_sent";
    case MetricId::chrfpp_sent: return "chrfpp_sent";
  }
  return "blaser_qe";
}

MetricId metric_from_string(std::string_view s) {
  for (auto m : {MetricId::blaser_qe, MetricId::cometkiwi, MetricId::metricx_hybrid, MetricId::bleu_sent,
                 MetricId::chrfpp_sent})
    if (to_string(m) == s) return m;
  throw InvalidArgument("unknown metric: " + std::string(s));
}

Polarity polarity(MetricId m) { return m == MetricId::metricx_hybrid ? Polarity::lower_better : Polarity::higher_better; }

bool needs_reference(MetricId m) {
  return m == MetricId::metricx_hybrid || m == MetricId::bleu_sent || m == MetricId::chrfpp_sent;
}

bool is_native(MetricId m) { return m == MetricId::bleu_sent || m == MetricId::chrfpp_sent; }

void ScoreRequest::validate() const {
  if (needs_reference(metric) && !reference)
    throw InvalidArgument(std::string(to_string(metric)) + " needs a reference");
  if (!needs_reference(metric) && reference)
    throw InvalidArgument(std::string(to_string(metric)) + " is reference-free; drop the reference");
}

std::vector<double> NativeScorer::score_batch(const std::vector<ScoreRequest>& requests) {
  std::vector<double> out;
  out.reserve(requests.size());
  for (const auto& r : requests) {
    r.validate();
    switch (r.metric) {
      case MetricId::bleu_sent: out.push_back(metrics::sentence_bleu(r.hypothesis, *r.reference)); break;
      case MetricId::chrfpp_sent: out.push_back(metrics::sentence_chrfpp(r.hypothesis, *r.reference)); break;
      default:
        throw MetricUnsupported(std::string(to_string(r.metric)) + " needs the remote scoring service");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

RemoteConfig RemoteConfig::from_json(const Json& j) {
  RemoteConfig c;
  c.base_url = j.value("base_url", c.base_url);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
  c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
  c.model_version = j.value("model_version", c.model_version);
  c.enforce_model_version = j.value("enforce_model_version", c.enforce_model_version);
  if (j.contains("cache_dir") && !j.at("cache_dir").is_null()) c.cache_dir = j.at("cache_dir").get<std::string>();
  if (j.contains("max_retries")) c.retry.max_retries = j.at("max_retries").get<int>();
  if (j.contains("retry_base_ms")) c.retry.base_delay = std::chrono::milliseconds(j.at("retry_base_ms").get<int>());
  if (c.batch_size == 0) throw InvalidArgument("batch_size must be positive");
  if (c.max_concurrency < 1) throw InvalidArgument("max_concurrency must be >= 1");
  return c;
}

namespace {

class TransientScoreError : public Error {
public:
  using Error::Error;
};

}  // namespace

RemoteScorer::RemoteScorer(RemoteConfig cfg)
    : cfg_(std::move(cfg)), http_(cfg_.base_url, std::chrono::seconds(cfg_.timeout_seconds)) {}

Json RemoteScorer::health() const {
  net::HttpResponse res;
  try {
    res = http_.get("/healthz");
  } catch (const net::ConnectionError& e) {
    throw RemoteUnavailable(e.what());
  }
  if (res.status != 200) throw RemoteUnavailable("scoring service not ready (HTTP " + std::to_string(res.status) + ")");
  try {
    return Json::parse(res.body);
  } catch (const Json::parse_error&) {
    throw RemoteUnavailable("scoring service returned malformed health JSON");
  }
}

std::size_t RemoteScorer::remote_calls() const {
  std::lock_guard lock(mu_);
  return remote_calls_;
}

std::string RemoteScorer::cache_key(const ScoreRequest& r) const {
  Json j{{"metric", std::string(to_string(r.metric))},
         {"model_version", cfg_.model_version},
         {"src", r.source},
         {"hyp", r.hypothesis},
         {"ref", r.reference ? Json(*r.reference) : Json(nullptr)}};
  return sha256_hex(j.dump());
}

std::optional<double> RemoteScorer::cache_get(const std::string& key) {
  {
    std::lock_guard lock(mu_);
    if (auto it = memory_.find(key); it != memory_.end()) return it->second;
  }
  if (!cfg_.cache_dir) return std::nullopt;
  const auto path = *cfg_.cache_dir / key.substr(0, 2) / (key + ".json");
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  double v = 0;
  try {
    v = Json::parse(read_file(path)).at("score").get<double>();
  } catch (const std::exception&) {
    return std::nullopt;
  }
  std::lock_guard lock(mu_);
  memory_.emplace(key, v);
  return v;
}

void RemoteScorer::cache_put(const std::string& key, double value) {
  {
    std::lock_guard lock(mu_);
    memory_.insert_or_assign(key, value);
  }
  if (!cfg_.cache_dir) return;
  const auto path = *cfg_.cache_dir / key.substr(0, 2) / (key + ".json");
  std::filesystem::create_directories(path.parent_path());
  write_file_atomic(path, Json{{"score", value}}.dump());
}

std::vector<double> RemoteScorer::post_batch(MetricId metric, const std::vector<const ScoreRequest*>& batch) {
  Json items = Json::array();
  for (const auto* r : batch) {
    Json item{{"src", r->source}, {"hyp", r->hypothesis}};
    if (r->reference) item["ref"] = *r->reference;
    items.push_back(std::move(item));
  }
  const std::string body = Json{{"metric", std::string(to_string(metric))}, {"items", std::move(items)}}.dump();

  const net::HttpResponse res = net::with_retries<TransientScoreError>(
      cfg_.retry,
      [&] {
        {
          std::lock_guard lock(mu_);
          ++remote_calls_;
        }
        net::HttpResponse r;
        try {
          r = http_.post_json("/score", body);
        } catch (const net::ConnectionError& e) {
          throw TransientScoreError(e.what());
        }
        if (net::is_transient_status(r.status)) throw TransientScoreError("HTTP " + std::to_string(r.status));
        return r;
      },
      [&](const std::string& last) {
        throw RemoteUnavailable("scoring service " + cfg_.base_url + " unavailable: " + last);
      });
  if (res.status != 200)
    throw Error("scoring service rejected the batch (HTTP " + std::to_string(res.status) + "): " + res.body.substr(0, 500));

  Json parsed;
  try {
    parsed = Json::parse(res.body);
  } catch (const Json::parse_error& e) {
    throw Error(std::string("scoring service returned malformed JSON: ") + e.what());
  }
  if (cfg_.enforce_model_version) {
    const std::string version = parsed.value("model_version", "");
    if (version != cfg_.model_version)
      throw Error("scoring service reports model version '" + version + "', expected '" + cfg_.model_version + "'");
  }
  auto scores = parsed.at("scores").get<std::vector<double>>();
  if (scores.size() != batch.size())
    throw Error("scoring service returned " + std::to_string(scores.size()) + " scores for " +
                std::to_string(batch.size()) + " items");
  return scores;
}

std::vector<double> RemoteScorer::score_batch(const std::vector<ScoreRequest>& requests) {
  std::vector<double> out(requests.size());
  std::vector<std::string> keys(requests.size());
  // Pending indices grouped by metric, in request order.
  std::vector<std::pair<MetricId, std::vector<std::size_t>>> pending;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    requests[i].validate();
    keys[i] = cache_key(requests[i]);
    if (auto hit = cache_get(keys[i])) {
      out[i] = *hit;
      continue;
    }
    auto it = std::find_if(pending.begin(), pending.end(), [&](const auto& p) { return p.first == requests[i].metric; });
    if (it == pending.end()) {
      pending.push_back({requests[i].metric, {}});
      it = std::prev(pending.end());
    }
    it->second.push_back(i);
  }

  struct Chunk {
    MetricId metric;
    std::vector<std::size_t> indices;
  };
  std::vector<Chunk> chunks;
  for (const auto& [metric, idx] : pending) {
    for (std::size_t s = 0; s < idx.size(); s += cfg_.batch_size) {
      const auto e = std::min(idx.size(), s + cfg_.batch_size);
      chunks.push_back({metric, std::vector<std::size_t>(idx.begin() + static_cast<std::ptrdiff_t>(s),
                                                         idx.begin() + static_cast<std::ptrdiff_t>(e))});
    }
  }
  gateway::parallel_for(chunks.size(), cfg_.max_concurrency, [&](std::size_t c) {
    std::vector<const ScoreRequest*> batch;
    for (auto i : chunks[c].indices) batch.push_back(&requests[i]);
    const auto scores = post_batch(chunks[c].metric, batch);
    for (std::size_t k = 0; k < scores.size(); ++k) {
      const auto i = chunks[c].indices[k];
      out[i] = scores[k];
      cache_put(keys[i], scores[k]);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double unit_hash(std::string_view data) {
  const std::string hex = sha256_hex(data);
  const std::uint64_t v = std::stoull(hex.substr(0, 13), nullptr, 16);
  return static_cast<double>(v) / static_cast<double>(1ULL << 52);
}

}  // namespace

std::vector<double> MockScorer::score_batch(const std::vector<ScoreRequest>& requests) {
  std::vector<double> out;
  out.reserve(requests.size());
  NativeScorer native;
  for (const auto& r : requests) {
    r.validate();
    if (is_native(r.metric)) {
      out.push_back(native.score_batch({r}).front());
      continue;
    }
    const double u = unit_hash(salt_ + '\x1f' + std::string(to_string(r.metric)) + '\x1f' + r.source + '\x1f' +
                               r.hypothesis + '\x1f' + r.reference.value_or(""));
    switch (r.metric) {
      case MetricId::blaser_qe: out.push_back(1.0 + 4.0 * u); break;
      case MetricId::cometkiwi: out.push_back(u); break;
      case MetricId::metricx_hybrid: out.push_back(r.hypothesis.empty() ? 25.0 : 25.0 * u); break;
      default: out.push_back(u); break;
    }
  }
  return out;
}

std::vector<double> FunctionScorer::score_batch(const std::vector<ScoreRequest>& requests) {
  std::vector<double> out;
  out.reserve(requests.size());
  for (const auto& r : requests) {
    r.validate();
    out.push_back(fn_(r));
  }
  return out;
}

std::shared_ptr<Scorer> make_scorer(const Json& cfg) {
  const std::string kind = cfg.value("kind", "");
  if (kind == "native") return std::make_shared<NativeScorer>();
  if (kind == "mock") return std::make_shared<MockScorer>(cfg.value("salt", ""));
  if (kind == "remote") return std::make_shared<RemoteScorer>(RemoteConfig::from_json(cfg));
  throw InvalidArgument("unknown scorer kind: '" + kind + "'");
}

// ---------------------------------------------------------------------------

std::string Provenance::to_string() const {
  return attempt ? "attempt(" + std::to_string(*attempt) + ")" : "ground_truth";
}

std::size_t best_index(const std::vector<double>& scores, Polarity pol) {
  if (scores.empty()) throw InvalidArgument("no candidates to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    const double s = scores[i];
    if (std::isnan(s)) continue;
    const double b = scores[best];
    const bool better = std::isnan(b) || (pol == Polarity::higher_better ? s > b : s < b);
    if (better) best = i;
  }
  return best;
}

Selection select_best(const std::string& ground_truth, const std::vector<std::string>& attempts,
                      const std::string& source, MetricId metric, Scorer& scorer) {
  if (needs_reference(metric))
    throw InvalidArgument(std::string(to_string(metric)) + " needs a reference; selection requires a QE metric");
  Selection sel;
  sel.candidates.push_back({ground_truth, 0.0, polarity(metric), Provenance{}});
  for (std::size_t i = 0; i < attempts.size(); ++i)
    sel.candidates.push_back({attempts[i], 0.0, polarity(metric), Provenance{i}});
  std::vector<ScoreRequest> requests;
  for (const auto& c : sel.candidates) requests.push_back({source, c.text, std::nullopt, metric});
  const auto scores = scorer.score_batch(requests);
  if (scores.size() != requests.size()) throw Error("scorer returned the wrong number of scores");
  for (std::size_t i = 0; i < scores.size(); ++i) sel.candidates[i].score = scores[i];
  sel.winner = sel.candidates[best_index(scores, polarity(metric))];
  return sel;
}

}  // namespace thinkmt::scorer
