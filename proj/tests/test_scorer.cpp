#include <doctest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>

#include "mock_server.hpp"
#include "support.hpp"
#include "thinkmt/metrics/bleu.hpp"
#include "thinkmt/metrics/chrf.hpp"
#include "thinkmt/scorer/scorer.hpp"

using namespace thinkmt;
using namespace thinkmt::scorer;
using testsupport::MockServer;

namespace {

RemoteConfig fast_remote(const std::string& url) {
  RemoteConfig c;
  c.base_url = url;
  c.retry.max_retries = 3;
  c.retry.base_delay = std::chrono::milliseconds(1);
  c.timeout_seconds = 5;
  return c;
}

/// A scoring service whose score is the hypothesis length. It answers 422
/// when the reference rule is broken and echoes `version`.
void install_length_scorer(MockServer& server, std::vector<Json>& bodies, std::mutex& mu,
                           const std::string& version = "v1") {
  server.post("/score", [&bodies, &mu, version](const MockServer::Request& r) {
    const auto body = Json::parse(r.body);
    {
      std::lock_guard lock(mu);
      bodies.push_back(body);
    }
    const bool ref_based = body["metric"] == "metricx_hybrid";
    Json scores = Json::array();
    for (const auto& item : body["items"]) {
      if (ref_based != item.contains("ref")) return MockServer::Reply{422, R"({"detail":"reference rule"})"};
      scores.push_back(static_cast<double>(item["hyp"].get<std::string>().size()));
    }
    return MockServer::Reply{200, Json{{"scores", scores}, {"model_version", version}}.dump()};
  });
}

}  // namespace

TEST_SUITE("scorer") {
  TEST_CASE("metric properties and reference rules") {
    CHECK(polarity(MetricId::metricx_hybrid) == Polarity::lower_better);
    CHECK(polarity(MetricId::blaser_qe) == Polarity::higher_better);
    CHECK(needs_reference(MetricId::metricx_hybrid));
    CHECK_FALSE(needs_reference(MetricId::cometkiwi));
    for (auto m : {MetricId::blaser_qe, MetricId::cometkiwi, MetricId::metricx_hybrid, MetricId::bleu_sent,
                   MetricId::chrfpp_sent})
      CHECK(metric_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(metric_from_string("comet"), InvalidArgument);

    CHECK_NOTHROW(ScoreRequest{"s", "h", std::nullopt, MetricId::blaser_qe}.validate());
    CHECK_THROWS_AS(ScoreRequest({"s", "h", std::string("r"), MetricId::cometkiwi}).validate(), InvalidArgument);
    CHECK_THROWS_AS(ScoreRequest({"s", "h", std::nullopt, MetricId::metricx_hybrid}).validate(), InvalidArgument);
  }

  TEST_CASE("native scorer matches the sentence-level metrics") {
    NativeScorer native;
    const std::vector<ScoreRequest> reqs{{"s", "the cat sat", std::string("the cat sat down"), MetricId::bleu_sent},
                                         {"s", "the cat sat", std::string("the cat sat down"), MetricId::chrfpp_sent}};
    const auto scores = native.score_batch(reqs);
    CHECK(scores[0] == metrics::sentence_bleu("the cat sat", "the cat sat down"));
    CHECK(scores[1] == metrics::sentence_chrfpp("the cat sat", "the cat sat down"));
    CHECK_THROWS_AS(native.score_batch({{"s", "h", std::nullopt, MetricId::blaser_qe}}), MetricUnsupported);
  }

  TEST_CASE("mock scorer is deterministic and within range") {
    MockScorer a("x"), b("x"), c("y");
    std::vector<ScoreRequest> reqs;
    for (int i = 0; i < 50; ++i) {
      reqs.push_back({"src " + std::to_string(i), "hyp " + std::to_string(i), std::nullopt, MetricId::blaser_qe});
      reqs.push_back({"src", "hyp " + std::to_string(i), std::nullopt, MetricId::cometkiwi});
      reqs.push_back({"src", "hyp " + std::to_string(i), std::string("ref"), MetricId::metricx_hybrid});
    }
    const auto sa = a.score_batch(reqs);
    CHECK(sa == b.score_batch(reqs));
    CHECK(sa != c.score_batch(reqs));
    for (std::size_t i = 0; i < reqs.size(); ++i) {
      switch (reqs[i].metric) {
        case MetricId::blaser_qe: CHECK((sa[i] >= 1.0 && sa[i] <= 5.0)); break;
        case MetricId::cometkiwi: CHECK((sa[i] >= 0.0 && sa[i] <= 1.0)); break;
        default: CHECK((sa[i] >= 0.0 && sa[i] <= 25.0)); break;
      }
    }
  }

  TEST_CASE("best_index: ties favour the ground truth, then the lowest attempt") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK(best_index({3.0, 3.0, 2.0}, Polarity::higher_better) == 0);
    CHECK(best_index({1.0, 3.0, 3.0}, Polarity::higher_better) == 1);
    CHECK(best_index({5.0, 3.0, 3.0}, Polarity::lower_better) == 1);
    CHECK(best_index({2.0, 2.0}, Polarity::lower_better) == 0);
    CHECK(best_index({nan, 1.0, 2.0}, Polarity::higher_better) == 2);
    CHECK(best_index({1.0, nan}, Polarity::higher_better) == 0);
    CHECK(best_index({7.0}, Polarity::lower_better) == 0);
    CHECK_THROWS_AS(best_index({}, Polarity::higher_better), InvalidArgument);
  }

  TEST_CASE("select_best scores ground truth and attempts with a QE metric") {
    FunctionScorer len([](const ScoreRequest& r) { return static_cast<double>(r.hypothesis.size()); });
    auto sel = select_best("gt", {"a", "longest", "longer"}, "src", MetricId::blaser_qe, len);
    CHECK(sel.winner.text == "longest");
    CHECK(sel.winner.provenance == Provenance{1});
    CHECK(sel.winner.provenance.to_string() == "attempt(1)");
    REQUIRE(sel.candidates.size() == 4);
    CHECK(sel.candidates[0].provenance.is_ground_truth());

    auto none = select_best("gt", {}, "src", MetricId::cometkiwi, len);
    CHECK(none.winner.text == "gt");
    CHECK(none.winner.provenance.to_string() == "ground_truth");

    auto tie = select_best("abc", {"xyz", "xy"}, "src", MetricId::blaser_qe, len);
    CHECK(tie.winner.provenance.is_ground_truth());

    CHECK_THROWS_AS(select_best("gt", {"a"}, "src", MetricId::metricx_hybrid, len), InvalidArgument);
  }

  TEST_CASE("remote scorer keeps request order across metrics and batches") {
    MockServer server;
    std::vector<Json> bodies;
    std::mutex mu;
    install_length_scorer(server, bodies, mu);
    server.start();

    auto cfg = fast_remote(server.url());
    cfg.batch_size = 3;
    cfg.model_version = "v1";
    cfg.enforce_model_version = true;
    RemoteScorer remote(cfg);

    std::vector<ScoreRequest> reqs;
    for (int i = 0; i < 10; ++i) {
      const std::string hyp(static_cast<std::size_t>(i + 1), 'h');
      if (i % 2)
        reqs.push_back({"s", hyp, std::string("ref"), MetricId::metricx_hybrid});
      else
        reqs.push_back({"s", hyp, std::nullopt, MetricId::cometkiwi});
    }
    const auto scores = remote.score_batch(reqs);
    for (std::size_t i = 0; i < reqs.size(); ++i) CHECK(scores[i] == static_cast<double>(i + 1));
    CHECK(remote.remote_calls() == 4);
    CHECK(bodies.size() == 4);
    for (const auto& b : bodies) {
      CHECK(b["items"].size() <= 3);
      CHECK(b["items"][0].contains("src"));
    }

    const auto again = remote.score_batch(reqs);
    CHECK(again == scores);
    CHECK(remote.remote_calls() == 4);
  }

  TEST_CASE("remote scorer: retries, errors and version checks") {
    MockServer server;
    std::atomic<int> flaky{2};
    server.post("/score", [&](const MockServer::Request& r) {
      const auto body = Json::parse(r.body);
      const auto hyp = body["items"][0]["hyp"].get<std::string>();
      if (hyp == "loading" && flaky-- > 0) return MockServer::Reply{503, R"({"detail":"loading"})"};
      if (hyp == "rule") return MockServer::Reply{422, R"({"detail":"reference rule"})"};
      if (hyp == "short") return MockServer::Reply{200, R"({"scores":[],"model_version":"v1"})"};
      if (hyp == "down") return MockServer::Reply{503, R"({"detail":"loading"})"};
      return MockServer::Reply{200, R"({"scores":[0.5],"model_version":"v2"})"};
    });
    server.start();

    auto cfg = fast_remote(server.url());
    cfg.model_version = "v1";
    RemoteScorer remote(cfg);
    CHECK(remote.score_batch({{"s", "loading", std::nullopt, MetricId::blaser_qe}}) == std::vector<double>{0.5});
    CHECK(remote.remote_calls() == 3);
    CHECK_THROWS_AS(remote.score_batch({{"s", "rule", std::nullopt, MetricId::blaser_qe}}), Error);
    CHECK_THROWS_AS(remote.score_batch({{"s", "short", std::nullopt, MetricId::blaser_qe}}), Error);
    CHECK_THROWS_AS(remote.score_batch({{"s", "down", std::nullopt, MetricId::blaser_qe}}), RemoteUnavailable);
    CHECK_THROWS_AS(remote.score_batch({{"s", "h", std::string("r"), MetricId::blaser_qe}}), InvalidArgument);

    cfg.enforce_model_version = true;
    RemoteScorer strict(cfg);
    CHECK_THROWS_AS(strict.score_batch({{"s", "fresh", std::nullopt, MetricId::blaser_qe}}), Error);

    RemoteScorer dead(fast_remote("http://127.0.0.1:" + std::to_string(testsupport::closed_port())));
    CHECK_THROWS_AS(dead.score_batch({{"s", "h", std::nullopt, MetricId::blaser_qe}}), RemoteUnavailable);
    CHECK_THROWS_AS(dead.health(), RemoteUnavailable);
  }

  TEST_CASE("remote cache keys and the on-disk cache") {
    testsupport::TempDir dir;
    MockServer server;
    std::vector<Json> bodies;
    std::mutex mu;
    install_length_scorer(server, bodies, mu);
    server.start();

    auto cfg = fast_remote(server.url());
    cfg.cache_dir = dir.path();
    cfg.model_version = "v1";
    const std::vector<ScoreRequest> reqs{{"s", "abc", std::nullopt, MetricId::blaser_qe},
                                         {"s", "abcd", std::nullopt, MetricId::blaser_qe}};
    {
      RemoteScorer first(cfg);
      CHECK(first.score_batch(reqs) == std::vector<double>{3.0, 4.0});
      CHECK(first.remote_calls() == 1);
    }
    RemoteScorer second(cfg);
    CHECK(second.score_batch(reqs) == std::vector<double>{3.0, 4.0});
    CHECK(second.remote_calls() == 0);

    auto other = cfg;
    other.model_version = "v2";
    RemoteScorer bumped(other);
    CHECK(bumped.cache_key(reqs[0]) != second.cache_key(reqs[0]));
    bumped.score_batch(reqs);
    CHECK(bumped.remote_calls() == 1);

    ScoreRequest with_metric = reqs[0];
    with_metric.metric = MetricId::cometkiwi;
    CHECK(second.cache_key(with_metric) != second.cache_key(reqs[0]));
    ScoreRequest with_source = reqs[0];
    with_source.source = "t";
    CHECK(second.cache_key(with_source) != second.cache_key(reqs[0]));
  }

  TEST_CASE("health endpoint") {
    MockServer server;
    std::atomic<bool> ready{false};
    server.get("/healthz", [&](const MockServer::Request&) {
      if (!ready) return MockServer::Reply{503, R"({"status":"loading"})"};
      return MockServer::Reply{200, R"({"status":"ok","loaded_metrics":["blaser_qe","cometkiwi"]})"};
    });
    server.start();
    RemoteScorer remote(fast_remote(server.url()));
    CHECK_THROWS_AS(remote.health(), RemoteUnavailable);
    ready = true;
    const auto h = remote.health();
    CHECK(h["status"] == "ok");
    CHECK(h["loaded_metrics"].size() == 2);
  }

  TEST_CASE("make_scorer") {
    CHECK(make_scorer(Json{{"kind", "native"}})->id() == "native");
    CHECK(make_scorer(Json{{"kind", "mock"}, {"salt", "q"}})->id() == "mock:q");
    CHECK(make_scorer(Json{{"kind", "remote"}, {"base_url", "http://h:1"}, {"model_version", "m"}})->id() ==
          "remote:http://h:1#m");
    CHECK_THROWS_AS(make_scorer(Json{{"kind", "magic"}}), InvalidArgument);
    CHECK_THROWS_AS(make_scorer(Json{{"kind", "remote"}, {"max_concurrency", 0}}), InvalidArgument);
  }
}
