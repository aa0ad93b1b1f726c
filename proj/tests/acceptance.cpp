// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit on any failure.
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "support.hpp"
#include "thinkmt/cli/cli.hpp"
#include "thinkmt/core/hash.hpp"
#include "thinkmt/core/prompts.hpp"
#include "thinkmt/core/text.hpp"
#include "thinkmt/decompose/decompose.hpp"
#include "thinkmt/eval/eval.hpp"
#include "thinkmt/forge/forge.hpp"
#include "thinkmt/gateway/backends.hpp"
#include "thinkmt/gateway/synthetic.hpp"
#include "thinkmt/metrics/bleu.hpp"
#include "thinkmt/metrics/bootstrap.hpp"
#include "thinkmt/metrics/chrf.hpp"
#include "thinkmt/strategies/strategies.hpp"

using namespace thinkmt;
namespace fs = std::filesystem;
using strategies::StrategyKind;
using strategies::TraceRecord;

namespace {

struct Failed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what) {
  if (!ok) throw Failed(what);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::unique_ptr<gateway::Gateway> synthetic_gateway(std::uint64_t seed) {
  return std::make_unique<gateway::Gateway>(
      gateway::make_backend(Json{{"kind", "mock"}, {"default", "synthetic"}, {"seed", seed}}));
}

// ---- metric parity ----------------------------------------------------------

void metric_parity() {
  const auto t0 = std::chrono::steady_clock::now();
  for (const std::string name : {"en_fr_100.json", "fuzz_500.json"}) {
    const auto fx = testsupport::fixture(name);
    const auto hyps = fx.at("hypotheses").get<std::vector<std::string>>();
    const auto refs = fx.at("references").get<std::vector<std::string>>();
    const auto& corpus = fx.at("corpus");
    const double bleu = metrics::corpus_bleu(hyps, refs);
    const double chrf = metrics::corpus_chrfpp(hyps, refs);
    expect(std::abs(bleu - corpus.at("bleu_13a").get<double>()) < 1e-4, name + ": BLEU " + std::to_string(bleu));
    expect(std::abs(chrf - corpus.at("chrfpp").get<double>()) < 1e-4, name + ": chrF++ " + std::to_string(chrf));
    const auto& sent = fx.at("sentence");
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      expect(std::abs(metrics::sentence_bleu(hyps[i], refs[i]) - sent[i].at("bleu").get<double>()) < 1e-4,
             name + ": sentence BLEU at " + std::to_string(i));
      expect(std::abs(metrics::sentence_chrfpp(hyps[i], refs[i]) - sent[i].at("chrfpp").get<double>()) < 1e-4,
             name + ": sentence chrF++ at " + std::to_string(i));
    }
  }
  const double elapsed = seconds_since(t0);
  expect(elapsed < 5.0, "took " + std::to_string(elapsed) + " s");
}

// ---- signatures -------------------------------------------------------------

/// Replies with the reference of the queried source; thinking-on replies
/// carry a reasoning block.
std::shared_ptr<gateway::ScriptedBackend> echo_backend(const ParallelDataset& d) {
  std::map<std::string, std::string> refs;
  for (const auto& r : d.records) refs[r.source] = r.target;
  auto backend = std::make_shared<gateway::ScriptedBackend>("echo");
  backend->otherwise([refs](const gateway::BackendRequest& req) -> std::string {
    const std::string text = req.prompt.is_chat() ? req.prompt.messages.front().content : req.prompt.text;
    const auto q = gateway::translation_query(text);
    if (!q || !refs.count(*q)) return "?";
    if (req.params.thinking == gateway::ThinkingMode::on) return "<think>\nreasoning\n</think>\n\n" + refs.at(*q);
    return refs.at(*q);
  });
  return backend;
}

ParallelDataset benchmark(std::size_t n) {
  const std::vector<std::string> words{"river", "mountain", "market", "teacher", "garden", "window", "letter",
                                       "morning", "village", "bridge", "winter", "doctor", "harbour"};
  ParallelDataset d;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& w = words[i % words.size()];
    d.records.push_back(testsupport::record(
        "s" + std::to_string(i + 1), "The " + w + " by the old house was quiet on day " + std::to_string(i) + ".",
        "Le " + w + " pres de la vieille maison etait calme le jour " + std::to_string(i) + "."));
  }
  d.manifest["content_sha256"] = "acceptance";
  return d;
}

eval::EvalConfig eval_config(gateway::ModelKind kind) {
  eval::EvalConfig cfg;
  cfg.benchmark = "acceptance";
  cfg.pair = testsupport::en_fr();
  cfg.model_kind = kind;
  cfg.workers = 4;
  cfg.significance.n_resamples = 100;
  cfg.significance.sample_size = 50;
  return cfg;
}

void signatures() {
  const auto d = benchmark(12);
  gateway::Gateway gw(echo_backend(d));
  const auto report = eval::run_eval(eval_config(gateway::ModelKind::instruct), d, gw);
  testsupport::TempDir dir;
  eval::save_report(dir.path(), report);
  const auto printed = eval::format_summary(report);
  const auto saved = read_file(dir / "summary.json");
  for (const auto* text : {&printed, &saved}) {
    expect(text->find("eff:no") != std::string::npos && text->find("smooth:exp") != std::string::npos,
           "BLEU signature lacks eff:no or smooth:exp");
    expect(text->find("eff:yes|nc:6|nw:2|space:no") != std::string::npos, "chrF++ signature lacks its settings");
  }
  expect(metrics::Bleu().signature().find("eff:no") != std::string::npos, "Bleu::signature");
  expect(metrics::Chrf().signature().find("eff:yes|nc:6|nw:2|space:no") != std::string::npos, "Chrf::signature");
}

// ---- prompt fidelity --------------------------------------------------------

void prompt_fidelity() {
  const auto io = testsupport::record("m", testsupport::kMiceSource, "x", {"English", "Hausa", "eng_Latn", "hau_Latn"});
  expect(build_io_prompt(io) == testsupport::golden("io_prompt_mice.txt"), "io prompt differs from the golden block");
  const auto chat = testsupport::record("m", testsupport::kMiceSource, "x", testsupport::en_xh());
  expect(build_instruct_prompt(chat) == testsupport::golden("instruct_prompt_mice.txt"),
         "instruct prompt differs from the golden block");

  std::mt19937_64 rng(17);
  const std::string alphabet = "abc xyz\n\tFinal Translation<>/.é";
  auto random_text = [&](std::size_t max_len) {
    std::uniform_int_distribution<std::size_t> len(1, max_len), pick(0, alphabet.size() - 1);
    std::string s;
    const auto n = len(rng);
    for (std::size_t i = 0; i < n; ++i) s += alphabet[pick(rng)];
    return s;
  };
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto trace = random_text(40);
    const auto target = random_text(20);
    std::string formatted;
    try {
      formatted = format_cot_target(trace, target);
    } catch (const InvalidArgument&) {
      continue;
    }
    ++checked;
    expect(formatted == "<think>\n" + trace + "\n</think>\n\nFinal Translation\n" + target, "cot layout");
    const auto parsed = parse_cot_target(formatted);
    expect(parsed && parsed->trace == trace && parsed->target == std::string(text::trim(target)),
           "cot round trip failed for case " + std::to_string(i));
  }
  expect(checked > 500, "too few valid cot cases");
}

// ---- trace templates ----------------------------------------------------------

const strategies::StepOutput& step(const TraceRecord& t, const std::string& name) {
  for (const auto& s : t.steps)
    if (s.step_name == name) return s;
  throw Failed("missing step " + name);
}

std::string fill(std::string tmpl, const std::map<std::string, std::string>& slots) {
  for (const auto& [k, v] : slots) tmpl = text::replace_all(tmpl, "{" + k + "}", v);
  return tmpl;
}

std::string fill_positional(std::string tmpl, const std::vector<std::string>& values) {
  std::size_t pos = 0;
  for (const auto& v : values) {
    pos = tmpl.find("{}", pos);
    expect(pos != std::string::npos, "template has fewer slots than values");
    tmpl.replace(pos, 2, v);
    pos += v.size();
  }
  expect(tmpl.find("{}") == std::string::npos, "template has unfilled slots");
  return tmpl;
}

void trace_templates() {
  const auto gw = synthetic_gateway(11);
  const std::vector<std::string> sources{testsupport::kMiceSource, "The river floods every spring after the snow melts.",
                                         "Children learn languages faster than adults do."};
  const std::vector<ParallelRecord> demos{testsupport::record("d1", "Good morning.", "Molo.", testsupport::en_xh())};
  for (std::size_t n = 0; n < sources.size(); ++n) {
    const auto r = testsupport::record("r" + std::to_string(n), sources[n], "x", testsupport::en_xh());

    const auto maps = strategies::run_maps(r, *gw, {});
    expect(maps.trace == fill(testsupport::golden("traces/maps.txt"),
                              {{"language", "Xhosa"},
                               {"zero-shot translation", step(maps, "zero_shot").parsed},
                               {"demonstrations", step(maps, "demonstrations").parsed},
                               {"demonstrations-inspired translation", step(maps, "demonstrations_draft").parsed},
                               {"keywords", step(maps, "keywords").parsed},
                               {"keywords-inspired translation", step(maps, "keywords_draft").parsed},
                               {"topics", step(maps, "topics").parsed},
                               {"topics-inspired translation", step(maps, "topics_draft").parsed}}),
           "MAPS trace");
    expect(maps.attempts.size() == 4, "MAPS attempts");

    const auto sbys = strategies::run_sbys(r, *gw, {});
    expect(sbys.trace == fill(testsupport::golden("traces/sbys.txt"),
                              {{"predrafting research", step(sbys, "research").parsed},
                               {"draft translation", step(sbys, "draft").parsed},
                               {"refinement", step(sbys, "refinement").parsed},
                               {"proofreading", step(sbys, "proofreading").parsed}}),
           "SBYS trace");
    expect(sbys.attempts.size() == 3, "SBYS attempts");

    const auto tear = strategies::run_tear(r, *gw, {}, demos);
    expect(tear.trace == fill(testsupport::golden("traces/tear.txt"),
                              {{"draft translation", step(tear, "draft").parsed},
                               {"MQM annotations", step(tear, "annotation").parsed},
                               {"refinement", step(tear, "refinement").parsed}}),
           "TEaR trace");
    expect(tear.attempts.size() == 2, "TEaR attempts");

    const auto refine = strategies::run_self_refine(r, *gw, {}, 3);
    expect(refine.trace == fill(testsupport::golden("traces/selfrefine.txt"),
                                {{"draft translation", step(refine, "draft").parsed},
                                 {"refinement 1", step(refine, "refine_1").parsed},
                                 {"refinement 2", step(refine, "refine_2").parsed},
                                 {"refinement 3", step(refine, "refine_3").parsed}}),
           "Self-Refine trace");
    for (int rounds = 1; rounds <= 5; ++rounds)
      expect(strategies::run_self_refine(r, *gw, {}, rounds).attempts.size() == static_cast<std::size_t>(rounds + 1),
             "Self-Refine attempts for " + std::to_string(rounds) + " rounds");

    const auto comptra = strategies::run_comptra(r, *gw, {}, {}, 3);
    std::vector<std::string> phrases;
    for (const auto& s : comptra.steps)
      if (s.step_name.rfind("decompose", 0) == 0) {
        phrases.clear();
        for (auto line : text::split_lines(s.parsed)) phrases.emplace_back(line);
      }
    std::vector<std::string> values;
    for (std::size_t i = 0; i < phrases.size(); ++i) {
      values.push_back(phrases[i]);
      values.push_back(step(comptra, "translate_" + std::to_string(i + 1)).parsed);
    }
    expect(values.size() == 6, "CompTra phrase count");
    expect(comptra.trace == fill_positional(testsupport::golden("traces/comptra.txt"), values), "CompTra trace");
    expect(comptra.attempts.empty(), "CompTra attempts");
  }
}

// ---- selection ----------------------------------------------------------------

ParallelDataset small_dataset(std::size_t n) {
  ParallelDataset d;
  for (std::size_t i = 0; i < n; ++i)
    d.records.push_back(testsupport::record("r" + std::to_string(i), "Source sentence number " + std::to_string(i) + ".",
                                            "Phrase source " + std::to_string(i) + "."));
  d.manifest["content_sha256"] = "acceptance";
  return d;
}

void selection_logic() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> n_attempts(0, 6), value(0, 4);
  for (int c = 0; c < 10000; ++c) {
    const auto n = static_cast<std::size_t>(n_attempts(rng));
    std::map<std::string, double> table;
    table["gt"] = value(rng);
    std::vector<std::string> attempts;
    for (std::size_t i = 0; i < n; ++i) {
      attempts.push_back("attempt " + std::to_string(i));
      table[attempts.back()] = value(rng);
    }
    scorer::FunctionScorer sc([&table](const scorer::ScoreRequest& r) { return table.at(r.hypothesis); }, "table");
    const auto sel = scorer::select_best("gt", attempts, "src", scorer::MetricId::blaser_qe, sc);
    double best = table["gt"];
    for (const auto& a : attempts) best = std::max(best, table[a]);
    const auto label = "case " + std::to_string(c);
    expect(sel.winner.score == best, label + ": winner is not extremal");
    expect(table.at(sel.winner.text) == best, label + ": winner text does not carry the best score");
    expect(sel.candidates.size() == n + 1, label + ": candidate count");
    if (table["gt"] == best) expect(sel.winner.provenance.is_ground_truth(), label + ": tie not given to ground truth");
    if (n == 0) expect(sel.winner.text == "gt", label + ": no attempts must yield the ground truth");

    std::vector<double> scores{static_cast<double>(value(rng))};
    for (std::size_t i = 0; i < n; ++i) scores.push_back(value(rng));
    const auto low = scorer::best_index(scores, scorer::Polarity::lower_better);
    const auto high = scorer::best_index(scores, scorer::Polarity::higher_better);
    expect(scores[low] == *std::min_element(scores.begin(), scores.end()), label + ": lower-better index");
    expect(scores[high] == *std::max_element(scores.begin(), scores.end()), label + ": higher-better index");
    if (scores[0] == scores[low]) expect(low == 0, label + ": lower-better tie");
    if (scores[0] == scores[high]) expect(high == 0, label + ": higher-better tie");
  }

  const auto gw = synthetic_gateway(3);
  const auto d = small_dataset(8);
  std::vector<TraceRecord> traces;
  for (const auto& r : d.records) traces.push_back(strategies::run_strategy(StrategyKind::comptra, r, *gw, {}));
  scorer::MockScorer sc;
  forge::BuildPlan plan;
  plan.condition = forge::Condition::ioft_max;
  plan.trace_source = "CompTra";
  const auto max = forge::build_ioft_max(d, traces, sc, plan);
  const auto plain = forge::build_ioft(d);
  expect(max.records.size() == plain.records.size(), "IOFT-Max(CompTra) row count");
  for (std::size_t i = 0; i < plain.records.size(); ++i)
    expect(max.records[i].prompt == plain.records[i].prompt && max.records[i].completion == plain.records[i].completion,
           "IOFT-Max(CompTra) differs from IOFT at row " + std::to_string(i));
}

// ---- BoA dominance -------------------------------------------------------------

void boa_dominance() {
  const auto gw = synthetic_gateway(9);
  const auto d = small_dataset(10);
  const std::vector<StrategyKind> kinds{StrategyKind::maps, StrategyKind::sbys, StrategyKind::tear,
                                        StrategyKind::self_refine, StrategyKind::comptra};
  std::map<StrategyKind, std::vector<TraceRecord>> all;
  for (auto kind : kinds)
    for (const auto& r : d.records) all[kind].push_back(strategies::run_strategy(kind, r, *gw, {}));

  scorer::MockScorer sc("frozen");
  auto score_of = [&](const ParallelRecord& r, const std::string& text) {
    return sc.score_batch({{r.source, text, std::nullopt, scorer::MetricId::blaser_qe}}).front();
  };
  std::map<StrategyKind, TrainingDataset> max;
  for (auto kind : kinds) {
    forge::BuildPlan p;
    p.condition = forge::Condition::ioft_max;
    p.trace_source = std::string(strategies::to_string(kind));
    max[kind] = forge::build_ioft_max(d, all[kind], sc, p);
  }
  for (unsigned mask = 1; mask < (1u << kinds.size()); ++mask) {
    forge::BuildPlan p;
    p.condition = forge::Condition::ioft_boa;
    std::map<StrategyKind, std::vector<TraceRecord>> subset;
    for (std::size_t k = 0; k < kinds.size(); ++k)
      if (mask & (1u << k)) {
        p.strategy_set.push_back(kinds[k]);
        subset[kinds[k]] = all[kinds[k]];
      }
    const auto boa = forge::build_ioft_boa(d, subset, sc, p);
    expect(boa.records.size() == d.records.size(), "BoA row count");
    for (std::size_t i = 0; i < d.records.size(); ++i) {
      const double b = score_of(d.records[i], boa.records[i].completion);
      for (auto kind : p.strategy_set)
        expect(b >= score_of(d.records[i], max[kind].records[i].completion),
               "subset " + std::to_string(mask) + " row " + std::to_string(i) + " loses to " +
                   std::string(strategies::to_string(kind)));
    }
  }
}

// ---- ext arithmetic --------------------------------------------------------------

void ext_arithmetic() {
  const auto gw = synthetic_gateway(21);
  for (std::size_t n : {1u, 7u, 25u}) {
    const auto d = small_dataset(n);
    for (auto kind : {decompose::DecompKind::paraphrases, decompose::DecompKind::syntactic}) {
      std::vector<decompose::AuxPair> pairs;
      for (const auto& r : d.records) {
        const auto items = decompose::decompose(r, kind, *gw, {});
        const auto translated = decompose::translate_aux(items, r, kind, *gw, {}, {});
        pairs.insert(pairs.end(), translated.begin(), translated.end());
      }
      forge::BuildPlan p;
      p.condition = forge::Condition::ioft_ext;
      p.decomp = kind;
      const auto out = forge::build_ioft_ext(d, pairs, p);
      expect(out.records.size() == 6 * n, std::string(decompose::to_string(kind)) + " with |D|=" + std::to_string(n) +
                                              " gave " + std::to_string(out.records.size()) + " rows");
    }
  }
}

// ---- bootstrap -------------------------------------------------------------------

void bootstrap_correctness() {
  const auto fx = testsupport::fixture("bootstrap_oracle.json");
  const auto hyps_a = fx["hypotheses_a"].get<std::vector<std::string>>();
  const auto hyps_b = fx["hypotheses_b"].get<std::vector<std::string>>();
  const auto refs = fx["references"].get<std::vector<std::string>>();
  const metrics::Bleu bleu;
  const metrics::Chrf chrf;
  for (const metrics::CorpusMetric* m : {static_cast<const metrics::CorpusMetric*>(&bleu),
                                         static_cast<const metrics::CorpusMetric*>(&chrf)}) {
    const auto a = m->corpus_stats(hyps_a, refs);
    const auto perfect = m->corpus_stats(refs, refs);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      metrics::SignificanceConfig cfg;
      cfg.seed = seed;
      cfg.n_resamples = 100;
      cfg.sample_size = 50;
      expect(!metrics::paired_bootstrap(a, a, *m, cfg).significant,
             m->name() + ": identical systems significant for seed " + std::to_string(seed));
      expect(metrics::paired_bootstrap(a, perfect, *m, cfg).significant,
             m->name() + ": dominant system not significant for seed " + std::to_string(seed));
    }
  }
  for (const auto& c : fx["cases"]) {
    const metrics::CorpusMetric& m = c["metric"] == "bleu" ? static_cast<const metrics::CorpusMetric&>(bleu) : chrf;
    metrics::SignificanceConfig cfg;
    cfg.seed = c["seed"].get<std::uint64_t>();
    cfg.n_resamples = c["n_resamples"].get<int>();
    cfg.sample_size = c["sample_size"].get<int>();
    const auto r = metrics::paired_bootstrap(m.corpus_stats(hyps_a, refs), m.corpus_stats(hyps_b, refs), m, cfg);
    expect(r.b_wins == c["b_wins"].get<int>() && r.p_value == c["p_value"].get<double>(),
           "oracle mismatch for " + c.dump());
  }
}

// ---- thinking protocol -------------------------------------------------------------

void thinking_protocol() {
  const auto d = benchmark(50);
  auto backend = echo_backend(d);
  gateway::Gateway gw(backend);
  auto cfg = eval_config(gateway::ModelKind::thinking);
  cfg.thinking = eval::ThinkingSetting::both;
  const auto t0 = std::chrono::steady_clock::now();
  const auto report = eval::run_eval(cfg, d, gw);
  const double elapsed = seconds_since(t0);
  expect(elapsed < 10.0, "50-segment run took " + std::to_string(elapsed) + " s");
  expect(report.runs.size() == 2 && report.runs[0].mode == "off" && report.runs[1].mode == "on", "run layout");
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto plain = eval::build_eval_prompt(d.records[i], {}, cfg.model_kind);
    expect(report.runs[1].segments[i].prompt == gateway::to_json(plain), "thinking-on prompt is not the plain prompt");
    expect(report.runs[0].segments[i].prompt == gateway::to_json(gateway::apply_nothink(plain)),
           "thinking-off prompt is not the plain prompt plus the priming");
  }
  for (const auto& req : backend->requests()) {
    const bool primed = gateway::has_nothink(req.prompt);
    expect(primed == (req.params.thinking == gateway::ThinkingMode::off), "backend saw a misprimed prompt");
  }

  auto truncating = std::make_shared<gateway::ScriptedBackend>();
  truncating->then("<think>\nthis never closes").otherwise([&](const gateway::BackendRequest& req) {
    const std::string text = req.prompt.messages.front().content;
    const auto q = gateway::translation_query(text).value_or("");
    for (const auto& r : d.records)
      if (r.source == q) return "<think>ok</think>" + r.target;
    return std::string("?");
  });
  gateway::Gateway gw2(truncating);
  auto cfg2 = eval_config(gateway::ModelKind::thinking);
  cfg2.workers = 1;
  const auto truncated = eval::run_eval(cfg2, benchmark(10), gw2);
  const auto& first = truncated.runs[0].segments[0];
  expect(first.has_flag("truncated_thinking") && first.hypothesis.empty() && first.has_flag("empty_hypothesis"),
         "truncated thinking was not flagged as an empty hypothesis");
  for (std::size_t i = 1; i < truncated.runs[0].segments.size(); ++i)
    expect(!truncated.runs[0].segments[i].has_flag("truncated_thinking"), "spurious truncation flag");
}

// ---- CLI determinism ----------------------------------------------------------------

std::map<std::string, std::string> snapshot_files(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root).string();
    if (rel.rfind("cache", 0) == 0) continue;
    files[rel] = sha256_hex(read_file(e.path()));
  }
  return files;
}

void cli_determinism() {
  testsupport::TempDir dir;
  std::string data;
  const auto d = benchmark(8);
  for (const auto& r : d.records)
    data += Json{{"id", r.id},         {"source", r.source},       {"target", r.target},
                 {"src_lang", "English"}, {"tgt_lang", "French"}, {"src_code", "eng_Latn"},
                 {"tgt_code", "fra_Latn"}}
                .dump() +
            "\n";
  write_file_atomic(dir / "data.jsonl", data);
  write_file_atomic(dir / "rows.jsonl", "{\"source\":\"s\",\"hypothesis\":\"a cat\",\"reference\":\"the cat\"}\n");
  const Json config{{"backend", {{"kind", "mock"}, {"default", "synthetic"}, {"seed", 5}}},
                    {"scorer", {{"kind", "mock"}}},
                    {"cache", true},
                    {"cache_dir", (dir / "cache").string()},
                    {"pair", {{"src", "English"}, {"tgt", "French"}}},
                    {"workers", 4},
                    {"eval", {{"significance", {{"n_resamples", 50}, {"sample_size", 20}}}}}};
  write_file_atomic(dir / "config.json", config.dump(2));
  const auto p = [&](const std::string& name) { return (dir / name).string(); };

  const std::vector<std::vector<std::string>> commands{
      {"traces", "--input", p("data.jsonl"), "--out", p("maps.jsonl"), "--strategy", "MAPS"},
      {"traces", "--input", p("data.jsonl"), "--out", p("tear.jsonl"), "--strategy", "TEaR"},
      {"traces", "--input", p("data.jsonl"), "--out", p("t3.jsonl"), "--template", "T3"},
      {"traces", "--input", p("data.jsonl"), "--out", p("sp.jsonl"), "--decomp", "SP"},
      {"forge", "--condition", "ioft", "--input", p("data.jsonl"), "--out", p("ioft.jsonl")},
      {"forge", "--condition", "cotft", "--input", p("data.jsonl"), "--out", p("cotft.jsonl"), "--template", "T3",
       "--traces", p("t3.jsonl")},
      {"forge", "--condition", "ioft-max", "--input", p("data.jsonl"), "--out", p("max.jsonl"), "--strategy", "MAPS",
       "--traces", p("maps.jsonl")},
      {"forge", "--condition", "cotft-max", "--input", p("data.jsonl"), "--out", p("cmax.jsonl"), "--strategy", "MAPS",
       "--traces", p("maps.jsonl")},
      {"forge", "--condition", "ioft-boa", "--input", p("data.jsonl"), "--out", p("boa.jsonl"), "--traces",
       p("maps.jsonl"), "--traces", p("tear.jsonl")},
      {"forge", "--condition", "ioft-ext", "--input", p("data.jsonl"), "--out", p("ext.jsonl"), "--decomp", "SP",
       "--aux", p("sp.jsonl")},
      {"eval", "--input", p("data.jsonl"), "--out", p("rep"), "--model-kind", "thinking", "--thinking", "both"},
      {"eval", "--input", p("data.jsonl"), "--out", p("rep_io"), "--model-kind", "instruct"},
      {"compare", "--a", p("rep_io"), "--b", p("rep"), "--run-b", "on", "--out", p("cmp.json")},
      {"score", "--metric", "chrfpp_sent", "--input", p("rows.jsonl"), "--out", p("scores.jsonl")},
  };
  for (const auto& cmd : commands) {
    std::vector<std::string> args{"--config", p("config.json"), "--log-level", "off"};
    args.insert(args.end(), cmd.begin(), cmd.end());
    std::string stdout_text[2];
    std::map<std::string, std::string> files[2];
    for (int pass = 0; pass < 2; ++pass) {
      std::ostringstream out, err;
      const int code = cli::run(args, out, err);
      expect(code == cli::kOk, cmd[0] + " " + cmd[2] + " exited " + std::to_string(code) + ": " + err.str());
      stdout_text[pass] = out.str();
      files[pass] = snapshot_files(dir.path());
    }
    expect(stdout_text[0] == stdout_text[1], cmd[0] + " " + cmd[2] + ": stdout differs on rerun");
    expect(files[0] == files[1], cmd[0] + " " + cmd[2] + ": outputs differ on rerun");
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void()>>> criteria{
      {"metric parity", metric_parity},
      {"signature fidelity", signatures},
      {"prompt fidelity", prompt_fidelity},
      {"trace-template fidelity", trace_templates},
      {"selection logic", selection_logic},
      {"BoA dominance", boa_dominance},
      {"ext arithmetic", ext_arithmetic},
      {"bootstrap correctness", bootstrap_correctness},
      {"thinking-mode protocol", thinking_protocol},
      {"determinism", cli_determinism},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    try {
      check();
      std::cout << "PASS " << name << "\n";
    } catch (const std::exception& e) {
      ++failures;
      std::cout << "FAIL " << name << ": " << e.what() << "\n";
    }
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size() << " criteria passed\n";
  return failures == 0 ? 0 : 1;
}
