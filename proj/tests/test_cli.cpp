#include <doctest.h>

#include <sstream>

#include "mock_server.hpp"
#include "support.hpp"
#include "thinkmt/cli/cli.hpp"
#include "thinkmt/core/jsonl.hpp"
#include "thinkmt/core/text.hpp"

using namespace thinkmt;
using testsupport::TempDir;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::run(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

const std::vector<std::pair<std::string, std::string>> kPairs{
    {"The river floods every spring.", "La riviere deborde chaque printemps."},
    {"Children learn languages quickly.", "Les enfants apprennent vite les langues."},
    {"The market opens at six.", "Le marche ouvre a six heures."},
    {"Scientists found ice on the moon.", "Des scientifiques ont trouve de la glace sur la lune."},
    {"My grandmother bakes bread on Sundays.", "Ma grand-mere fait du pain le dimanche."},
    {"The train was late again this morning.", "Le train etait encore en retard ce matin."},
};

/// A workspace holding a config with the offline backend and scorer and a
/// small English-French dataset.
struct Workspace {
  TempDir dir;

  explicit Workspace(Json backend = Json{{"kind", "mock"}, {"default", "synthetic"}, {"seed", 7}}) {
    std::string data;
    for (std::size_t i = 0; i < kPairs.size(); ++i) {
      data += Json{{"id", "d" + std::to_string(i)},  {"source", kPairs[i].first}, {"target", kPairs[i].second},
                   {"src_lang", "English"},           {"tgt_lang", "French"},      {"src_code", "eng_Latn"},
                   {"tgt_code", "fra_Latn"}}
                  .dump() +
              "\n";
    }
    write_file_atomic(dir / "data.jsonl", data);
    const Json config{{"backend", std::move(backend)},
                      {"scorer", {{"kind", "mock"}}},
                      {"retry", {{"max_retries", 1}, {"base_delay_ms", 1}}},
                      {"pair", {{"src", "English"}, {"tgt", "French"}}},
                      {"workers", 3},
                      {"eval", {{"significance", {{"n_resamples", 50}, {"sample_size", 20}}}}}};
    write_file_atomic(dir / "config.json", config.dump(2));
  }

  std::string path(const std::string& name) const { return (dir / name).string(); }

  Outcome run(std::vector<std::string> args) const {
    args.insert(args.begin(), {"--config", path("config.json"), "--log-level", "error"});
    return run_cli(std::move(args));
  }
};

std::size_t line_count(const std::string& path) {
  return read_jsonl(path).size();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit with the configuration code") {
    CHECK(run_cli({}).code == cli::kConfigError);
    CHECK(run_cli({"bogus"}).code == cli::kConfigError);
    const auto missing = run_cli({"traces", "--out", "x.jsonl"});
    CHECK(missing.code == cli::kConfigError);
    CHECK(missing.err.find("--input") != std::string::npos);
    CHECK(run_cli({"--help"}).code == cli::kOk);

    Workspace ws;
    CHECK(ws.run({"traces", "--input", ws.path("data.jsonl"), "--out", ws.path("t.jsonl")}).code ==
          cli::kConfigError);
    CHECK(ws.run({"traces", "--input", ws.path("data.jsonl"), "--out", ws.path("t.jsonl"), "--strategy", "maps",
                  "--template", "T1"})
              .code == cli::kConfigError);
    CHECK(ws.run({"traces", "--input", ws.path("data.jsonl"), "--out", ws.path("t.jsonl"), "--strategy", "magic"})
              .code == cli::kConfigError);
    CHECK(ws.run({"forge", "--condition", "ioft-max", "--input", ws.path("data.jsonl"), "--out", ws.path("f.jsonl")})
              .code == cli::kConfigError);
  }

  TEST_CASE("traces, then forge, with byte-identical reruns") {
    Workspace ws;
    const auto first = ws.run({"traces", "--input", ws.path("data.jsonl"), "--out", ws.path("maps.jsonl"), "--strategy",
                               "maps"});
    REQUIRE(first.code == cli::kOk);
    CHECK(first.out == "traces: 6 written, 0 failed\n");
    CHECK(std::filesystem::exists(ws.path("maps.jsonl.config.json")));
    const auto bytes = read_file(ws.path("maps.jsonl"));
    REQUIRE(ws.run({"traces", "--input", ws.path("data.jsonl"), "--out", ws.path("maps.jsonl"), "--strategy", "MAPS"})
                .code == cli::kOk);
    CHECK(read_file(ws.path("maps.jsonl")) == bytes);

    REQUIRE(ws.run({"traces", "--input", ws.path("data.jsonl"), "--out", ws.path("t1.jsonl"), "--template", "t1"})
                .code == cli::kOk);
    CHECK(line_count(ws.path("t1.jsonl")) == 6);
    REQUIRE(ws.run({"traces", "--input", ws.path("data.jsonl"), "--out", ws.path("p.jsonl"), "--decomp", "P"}).code ==
            cli::kOk);
    CHECK(line_count(ws.path("p.jsonl")) == 6);

    const auto max = ws.run({"forge", "--condition", "ioft-max", "--input", ws.path("data.jsonl"), "--out",
                             ws.path("max.jsonl"), "--strategy", "maps", "--traces", ws.path("maps.jsonl")});
    REQUIRE(max.code == cli::kOk);
    CHECK(max.out.find("condition: ioft-max") != std::string::npos);
    CHECK(max.out.find("rows: 6 (input records: 6)") != std::string::npos);
    const auto forged = read_file(ws.path("max.jsonl"));
    REQUIRE(ws.run({"forge", "--condition", "ioft-max", "--input", ws.path("data.jsonl"), "--out", ws.path("max.jsonl"),
                    "--strategy", "maps", "--traces", ws.path("maps.jsonl")})
                .code == cli::kOk);
    CHECK(read_file(ws.path("max.jsonl")) == forged);

    const auto cot = ws.run({"forge", "--condition", "cotft", "--input", ws.path("data.jsonl"), "--out",
                             ws.path("cot.jsonl"), "--template", "T1", "--traces", ws.path("t1.jsonl")});
    REQUIRE(cot.code == cli::kOk);
    CHECK(read_training_dataset(ws.path("cot.jsonl")).records.size() == 6);

    const auto ext = ws.run({"forge", "--condition", "ioft-ext", "--input", ws.path("data.jsonl"), "--out",
                             ws.path("ext.jsonl"), "--decomp", "P", "--aux", ws.path("p.jsonl")});
    REQUIRE(ext.code == cli::kOk);
    CHECK(read_training_dataset(ws.path("ext.jsonl")).records.size() == 36);
  }

  TEST_CASE("forge ioft-boa over several trace files") {
    Workspace ws;
    for (const std::string s : {"sbys", "tear"})
      REQUIRE(ws.run({"traces", "--input", ws.path("data.jsonl"), "--out", ws.path(s + ".jsonl"), "--strategy", s})
                  .code == cli::kOk);
    const auto boa = ws.run({"forge", "--condition", "ioft-boa", "--input", ws.path("data.jsonl"), "--out",
                             ws.path("boa.jsonl"), "--traces", ws.path("sbys.jsonl"), "--traces", ws.path("tear.jsonl")});
    REQUIRE(boa.code == cli::kOk);
    const auto d = read_training_dataset(ws.path("boa.jsonl"));
    CHECK(d.records.size() == 6);
    CHECK(d.manifest["plan"]["strategy_set"].size() == 2);
  }

  TEST_CASE("eval writes a report and compare reads it back") {
    Workspace ws;
    const std::vector<std::string> args{"eval",         "--input",      ws.path("data.jsonl"), "--out",
                                        ws.path("rep"), "--model-kind", "thinking",            "--thinking",
                                        "both",         "--src",        "English",             "--tgt",
                                        "French"};
    const auto first = ws.run(args);
    REQUIRE(first.code == cli::kOk);
    CHECK(first.out.find("thinking=off") != std::string::npos);
    CHECK(std::filesystem::exists(ws.path("rep/summary.json")));
    CHECK(std::filesystem::exists(ws.path("rep/config.json")));
    const auto segments = read_file(ws.path("rep/segments.jsonl"));
    const auto summary = read_file(ws.path("rep/summary.json"));
    REQUIRE(ws.run(args).code == cli::kOk);
    CHECK(read_file(ws.path("rep/segments.jsonl")) == segments);
    CHECK(read_file(ws.path("rep/summary.json")) == summary);

    auto single = args;
    single[2] = ws.path("data.jsonl");
    single[4] = ws.path("rep2");
    single[8] = "off";
    REQUIRE(ws.run(single).code == cli::kOk);
    const auto cmp = ws.run({"compare", "--a", ws.path("rep2"), "--b", ws.path("rep"), "--run-b", "on", "--out",
                             ws.path("cmp.json")});
    REQUIRE(cmp.code == cli::kOk);
    const auto verdicts = Json::parse(read_file(ws.path("cmp.json")));
    CHECK(verdicts.dump().find("BLEU") != std::string::npos);

    CHECK(ws.run({"compare", "--a", ws.path("rep2"), "--b", ws.path("rep")}).code == cli::kConfigError);
  }

  TEST_CASE("score computes native metrics row by row") {
    Workspace ws;
    write_file_atomic(ws.dir / "rows.jsonl",
                      "{\"source\":\"s\",\"hypothesis\":\"the cat sat\",\"reference\":\"the cat sat\"}\n"
                      "{\"src\":\"s\",\"hyp\":\"a dog\",\"ref\":\"the cat sat\"}\n");
    const auto r = ws.run({"score", "--metric", "chrfpp_sent", "--input", ws.path("rows.jsonl")});
    REQUIRE(r.code == cli::kOk);
    std::vector<Json> lines;
    for (const auto& line : text::split_lines(r.out))
      if (!line.empty()) lines.push_back(Json::parse(std::string(line)));
    REQUIRE(lines.size() == 2);
    CHECK(lines[0]["score"].get<double>() == doctest::Approx(100.0));
    CHECK(lines[1]["index"] == 1);
    const auto neural = ws.run({"score", "--metric", "metricx_hybrid", "--input", ws.path("rows.jsonl")});
    CHECK(neural.code == cli::kOk);
    CHECK(neural.out.find("\"metric\":\"metricx_hybrid\"") != std::string::npos);
    CHECK(ws.run({"score", "--metric", "nonsense", "--input", ws.path("rows.jsonl")}).code == cli::kConfigError);
  }

  TEST_CASE("backend and scorer outages exit with the backend code") {
    const int port = testsupport::closed_port();
    Workspace down(Json{{"kind", "openai"}, {"base_url", "http://127.0.0.1:" + std::to_string(port) + "/v1"},
                        {"model", "m"}});
    CHECK(down.run({"traces", "--input", down.path("data.jsonl"), "--out", down.path("t.jsonl"), "--strategy", "tear"})
              .code == cli::kBackendError);

    Workspace ws;
    auto cfg = Json::parse(read_file(ws.dir / "config.json"));
    cfg["scorer"] = {{"kind", "remote"}, {"base_url", "http://127.0.0.1:" + std::to_string(port)},
                     {"max_retries", 1}, {"retry_base_ms", 1}};
    write_file_atomic(ws.dir / "config.json", cfg.dump());
    CHECK(ws.run({"score", "--healthz"}).code == cli::kBackendError);

    testsupport::MockServer server;
    server.get("/healthz", [](const testsupport::MockServer::Request&) {
      return testsupport::MockServer::Reply{200, R"({"status":"ok","loaded_metrics":["blaser_qe"]})"};
    });
    server.start();
    cfg["scorer"]["base_url"] = server.url();
    write_file_atomic(ws.dir / "config.json", cfg.dump());
    const auto ok = ws.run({"score", "--healthz"});
    CHECK(ok.code == cli::kOk);
    CHECK(ok.out.find("ok") != std::string::npos);
  }

  TEST_CASE("more than a tenth of failed records is a partial failure") {
    Workspace ws(Json{{"kind", "mock"}, {"default", ""}});
    const auto r = ws.run({"traces", "--input", ws.path("data.jsonl"), "--out", ws.path("t.jsonl"), "--strategy",
                           "selfrefine"});
    CHECK(r.code == cli::kPartialFailure);
    CHECK(r.out == "traces: 0 written, 6 failed\n");
    CHECK(std::filesystem::exists(ws.path("t.jsonl")));
  }
}
