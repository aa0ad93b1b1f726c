#include "thinkmt/eval/eval.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "thinkmt/core/jsonl.hpp"
#include "thinkmt/core/prompts.hpp"
#include "thinkmt/core/text.hpp"
#include "thinkmt/metrics/chrf.hpp"

namespace thinkmt::eval {

using gateway::ModelKind;
using gateway::ThinkingMode;

// ---- benchmarks -----------------------------------------------------------

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(std::move(line));
  }
  return out;
}

}  // namespace

ParallelDataset load_benchmark_text(const std::filesystem::path& source_file,
                                    const std::filesystem::path& reference_file, const LangPair& pair,
                                    const std::string& name, std::optional<std::size_t> limit) {
  pair.validate();
  auto sources = read_lines(source_file);
  auto refs = read_lines(reference_file);
  if (sources.size() != refs.size())
    throw InvalidArgument(source_file.string() + " has " + std::to_string(sources.size()) + " lines but " +
                          reference_file.string() + " has " + std::to_string(refs.size()));
  ParallelDataset d;
  const std::size_t n = limit ? std::min(*limit, sources.size()) : sources.size();
  for (std::size_t i = 0; i < n; ++i)
    d.records.push_back({name + ":" + std::to_string(i + 1), std::move(sources[i]), std::move(refs[i]), pair});
  d.manifest["benchmark"] = name;
  d.validate();
  return d;
}

ParallelDataset load_benchmark_jsonl(const std::filesystem::path& file, const LangPair& pair, const std::string& name,
                                     std::optional<std::size_t> limit) {
  pair.validate();
  ParallelDataset d;
  std::size_t line = 0;
  for (const auto& row : read_jsonl(file)) {
    if (limit && d.records.size() >= *limit) break;
    ++line;
    auto field = [&](std::initializer_list<const char*> keys) -> std::string {
      for (const char* k : keys)
        if (const auto it = row.find(k); it != row.end() && it->is_string()) return it->get<std::string>();
      throw ParseError(file.string() + ": record " + std::to_string(line) + " lacks " + *keys.begin());
    };
    ParallelRecord r;
    r.id = row.contains("id") && row["id"].is_string() ? row["id"].get<std::string>()
                                                       : name + ":" + std::to_string(line);
    r.source = field({"source", "src"});
    r.target = field({"target", "reference", "ref"});
    r.pair = pair;
    d.records.push_back(std::move(r));
  }
  d.manifest["benchmark"] = name;
  d.validate();
  return d;
}

// ---- prompts --------------------------------------------------------------

gateway::Prompt build_eval_prompt(const ParallelRecord& record, const std::vector<ParallelRecord>& demos,
                                  ModelKind kind) {
  std::string blocks;
  for (const auto& d : demos) {
    blocks += build_io_demo(ParallelRecord{d.id, d.source, d.target, record.pair});
    blocks += "\n\n";
  }
  if (kind == ModelKind::finetuned_io || kind == ModelKind::finetuned_cot)
    return gateway::Prompt::raw(blocks + build_io_prompt(record));
  return gateway::Prompt::user(blocks + build_instruct_prompt(record));
}

// ---- configuration --------------------------------------------------------

std::string_view to_string(ThinkingSetting t) {
  switch (t) {
    case ThinkingSetting::on: return "on";
    case ThinkingSetting::off: return "off";
    case ThinkingSetting::both: return "both";
    case ThinkingSetting::not_applicable: return "n/a";
  }
  return "n/a";
}

ThinkingSetting thinking_setting_from_string(std::string_view s) {
  for (auto t : {ThinkingSetting::on, ThinkingSetting::off, ThinkingSetting::both, ThinkingSetting::not_applicable})
    if (to_string(t) == s) return t;
  throw InvalidArgument("unknown thinking setting: " + std::string(s) + " (expected on, off, both or n/a)");
}

namespace {

std::string_view tokenizer_name(metrics::TokenizerKind k) {
  switch (k) {
    case metrics::TokenizerKind::thirteen_a: return "13a";
    case metrics::TokenizerKind::character: return "char";
    case metrics::TokenizerKind::external_spm: return "spm";
  }
  return "13a";
}

metrics::TokenizerKind tokenizer_from_name(std::string_view s) {
  for (auto k : {metrics::TokenizerKind::thirteen_a, metrics::TokenizerKind::character,
                 metrics::TokenizerKind::external_spm})
    if (tokenizer_name(k) == s) return k;
  throw InvalidArgument("unknown BLEU tokenizer: " + std::string(s));
}

std::vector<ThinkingMode> modes_of(ThinkingSetting t) {
  switch (t) {
    case ThinkingSetting::on: return {ThinkingMode::on};
    case ThinkingSetting::off: return {ThinkingMode::off};
    case ThinkingSetting::both: return {ThinkingMode::off, ThinkingMode::on};
    case ThinkingSetting::not_applicable: return {ThinkingMode::not_applicable};
  }
  return {};
}

}  // namespace

ThinkingSetting EvalConfig::effective_thinking() const {
  if (thinking) return *thinking;
  return model_kind == ModelKind::thinking ? ThinkingSetting::on : ThinkingSetting::not_applicable;
}

void EvalConfig::validate() const {
  pair.validate();
  if (benchmark.empty()) throw InvalidArgument("eval: benchmark name is empty");
  if (shots < 0) throw InvalidArgument("eval: shots must be >= 0");
  if (shots > 0) {
    if (!pool || pool->empty()) throw InvalidArgument("eval: shots > 0 requires a demonstration pool");
    if (static_cast<std::size_t>(shots) > pool->size())
      throw InvalidArgument("eval: " + std::to_string(shots) + " shots but the pool has " +
                            std::to_string(pool->size()) + " records");
  }
  const auto t = effective_thinking();
  if (model_kind == ModelKind::thinking && t == ThinkingSetting::not_applicable)
    throw InvalidArgument("eval: thinking models need thinking on, off or both");
  if (model_kind != ModelKind::thinking && t != ThinkingSetting::not_applicable)
    throw InvalidArgument("eval: thinking " + std::string(to_string(t)) + " requires model_kind thinking");
  if (bleu_tokenizer == metrics::TokenizerKind::external_spm && spm_vocab.empty())
    throw InvalidArgument("eval: the spm tokenizer needs a vocabulary file");
  if (!(max_failure_rate >= 0.0 && max_failure_rate <= 1.0))
    throw InvalidArgument("eval: max_failure_rate must be in [0, 1]");
  if (workers < 1) throw InvalidArgument("eval: workers must be >= 1");
  significance.validate();
  auto p = params;
  p.thinking = modes_of(t).front();
  p.validate();
}

Json EvalConfig::to_json() const {
  Json j;
  j["benchmark"] = benchmark;
  j["pair"] = {{"src", pair.src}, {"tgt", pair.tgt}, {"src_code", pair.src_code}, {"tgt_code", pair.tgt_code}};
  j["shots"] = shots;
  j["pool_size"] = pool ? Json(pool->size()) : Json(nullptr);
  j["thinking"] = std::string(to_string(effective_thinking()));
  j["params"] = params.to_json();
  j["model_kind"] = std::string(gateway::to_string(model_kind));
  j["bleu_tokenizer"] = std::string(tokenizer_name(bleu_tokenizer));
  if (bleu_tokenizer == metrics::TokenizerKind::external_spm) {
    j["spm_vocab"] = spm_vocab.string();
    j["spm_name"] = spm_name;
  }
  Json remote = Json::array();
  for (auto m : remote_metrics) remote.push_back(std::string(scorer::to_string(m)));
  j["remote_metrics"] = std::move(remote);
  j["significance"] = {{"n_resamples", significance.n_resamples},
                       {"sample_size", significance.sample_size},
                       {"p_threshold", significance.p_threshold},
                       {"seed", significance.seed}};
  j["bm25"] = bm25.to_json();
  j["max_failure_rate"] = max_failure_rate;
  return j;
}

std::vector<std::unique_ptr<metrics::CorpusMetric>> native_metrics(const EvalConfig& cfg) {
  metrics::BleuConfig bc;
  bc.tokenizer = cfg.bleu_tokenizer;
  bc.spm_vocab = cfg.spm_vocab;
  bc.spm_name = cfg.spm_name;
  std::vector<std::unique_ptr<metrics::CorpusMetric>> out;
  out.push_back(std::make_unique<metrics::Bleu>(bc));
  out.push_back(std::make_unique<metrics::Chrf>());
  return out;
}

namespace {

EvalConfig metric_config_from_json(const Json& j) {
  EvalConfig cfg;
  cfg.bleu_tokenizer = tokenizer_from_name(j.value("bleu_tokenizer", std::string("13a")));
  cfg.spm_vocab = j.value("spm_vocab", std::string());
  cfg.spm_name = j.value("spm_name", std::string("spm"));
  return cfg;
}

}  // namespace

// ---- reports --------------------------------------------------------------

bool SegmentResult::has_flag(std::string_view f) const {
  return std::find(flags.begin(), flags.end(), f) != flags.end();
}

const MetricValue* RunReport::metric(std::string_view name) const {
  for (const auto& m : metrics)
    if (m.name == name) return &m;
  return nullptr;
}

namespace {

std::vector<std::string> hypotheses(const RunReport& run) {
  std::vector<std::string> out;
  for (const auto& s : run.segments) out.push_back(s.hypothesis);
  return out;
}

std::vector<std::string> references(const RunReport& run) {
  std::vector<std::string> out;
  for (const auto& s : run.segments) out.push_back(s.reference);
  return out;
}

bool is_native_name(const std::vector<std::unique_ptr<metrics::CorpusMetric>>& native, const std::string& name) {
  for (const auto& m : native)
    if (m->name() == name) return true;
  return false;
}

std::vector<metrics::SegmentStats> remote_stats(const RunReport& run, const std::string& name) {
  std::vector<metrics::SegmentStats> out;
  for (const auto& s : run.segments) {
    const auto it = s.scores.find(name);
    if (it == s.scores.end()) throw ReportInconsistent("segment " + s.id + " has no " + name + " score");
    out.push_back(metrics::MeanMetric::stats_for(it->second));
  }
  return out;
}

void score_remote(RunReport& run, const EvalConfig& cfg, scorer::Scorer& remote) {
  for (auto metric : cfg.remote_metrics) {
    std::vector<scorer::ScoreRequest> requests;
    for (const auto& s : run.segments) {
      scorer::ScoreRequest r{s.source, s.hypothesis, std::nullopt, metric};
      if (scorer::needs_reference(metric)) r.reference = s.reference;
      requests.push_back(std::move(r));
    }
    const auto scores = remote.score_batch(requests);
    const std::string name(scorer::to_string(metric));
    for (std::size_t i = 0; i < scores.size(); ++i) run.segments[i].scores[name] = scores[i];
  }
}

}  // namespace

std::vector<MetricValue> recompute_metrics(const RunReport& run,
                                           const std::vector<std::unique_ptr<metrics::CorpusMetric>>& native) {
  std::vector<MetricValue> out;
  if (run.segments.empty()) throw InvalidArgument("run has no segments");
  const auto hyps = hypotheses(run);
  const auto refs = references(run);
  for (const auto& m : native) out.push_back({m->name(), m->signature(), m->corpus_score(hyps, refs), true});
  for (const auto& stored : run.metrics) {
    if (is_native_name(native, stored.name)) continue;
    const metrics::MeanMetric mean(stored.name, stored.higher_is_better);
    out.push_back({stored.name, stored.signature, mean.score_from_stats(metrics::sum_stats(remote_stats(run, stored.name))),
                   stored.higher_is_better});
  }
  return out;
}

std::vector<Verdict> compare_runs(const RunReport& a, const RunReport& b, const metrics::SignificanceConfig& cfg,
                                  const std::vector<std::unique_ptr<metrics::CorpusMetric>>& native) {
  if (a.segments.size() != b.segments.size())
    throw InvalidArgument("compare: runs have " + std::to_string(a.segments.size()) + " and " +
                          std::to_string(b.segments.size()) + " segments");
  for (std::size_t i = 0; i < a.segments.size(); ++i) {
    const auto& sa = a.segments[i];
    const auto& sb = b.segments[i];
    if (sa.id != sb.id || sa.source != sb.source || sa.reference != sb.reference)
      throw InvalidArgument("compare: segment " + std::to_string(i + 1) + " differs (" + sa.id + " vs " + sb.id + ")");
  }
  const std::string label_a = a.mode;
  const std::string label_b = a.mode == b.mode ? b.mode + "'" : b.mode;

  auto verdict_for = [&](const metrics::CorpusMetric& metric, const std::vector<metrics::SegmentStats>& stats_a,
                         const std::vector<metrics::SegmentStats>& stats_b) {
    const auto ba = metrics::paired_bootstrap(stats_a, stats_b, metric, cfg);
    const auto ab = metrics::paired_bootstrap(stats_b, stats_a, metric, cfg);
    Verdict v;
    v.metric = metric.name();
    v.signature = metric.signature();
    v.system_a = label_a;
    v.system_b = label_b;
    v.score_a = ba.score_a;
    v.score_b = ba.score_b;
    v.p_b_over_a = ba.p_value;
    v.p_a_over_b = ab.p_value;
    v.significant = ba.significant ? "b" : ab.significant ? "a" : "ns";
    const bool higher = metric.higher_is_better();
    v.bold_a = higher ? v.score_a > v.score_b : v.score_a < v.score_b;
    v.bold_b = higher ? v.score_b > v.score_a : v.score_b < v.score_a;
    return v;
  };

  std::vector<Verdict> out;
  const auto refs = references(a);
  for (const auto& m : native)
    out.push_back(verdict_for(*m, m->corpus_stats(hypotheses(a), refs), m->corpus_stats(hypotheses(b), refs)));
  for (const auto& ma : a.metrics) {
    if (is_native_name(native, ma.name) || !b.metric(ma.name)) continue;
    metrics::MeanMetric mean(ma.name, ma.higher_is_better);
    auto v = verdict_for(mean, remote_stats(a, ma.name), remote_stats(b, ma.name));
    v.signature = ma.signature;
    out.push_back(std::move(v));
  }
  return out;
}

EvalReport run_eval(const EvalConfig& cfg, const ParallelDataset& benchmark, gateway::Gateway& gw,
                    scorer::Scorer* remote) {
  cfg.validate();
  if (benchmark.records.empty()) throw InvalidArgument("eval: empty benchmark");
  if (!cfg.remote_metrics.empty() && !remote) throw InvalidArgument("eval: remote metrics configured without a scorer");
  const auto& records = benchmark.records;

  std::vector<gateway::Prompt> prompts;
  prompts.reserve(records.size());
  std::optional<Bm25Index> index;
  if (cfg.shots > 0) index.emplace(*cfg.pool, cfg.bm25);
  for (const auto& r : records) {
    std::vector<ParallelRecord> demos;
    if (index)
      for (auto i : index->top_k(r.source, static_cast<std::size_t>(cfg.shots))) demos.push_back((*cfg.pool)[i]);
    prompts.push_back(build_eval_prompt(r, demos, cfg.model_kind));
  }

  const auto native = native_metrics(cfg);
  EvalReport report;
  for (auto mode : modes_of(cfg.effective_thinking())) {
    auto params = cfg.params;
    params.thinking = mode;
    RunReport run;
    run.mode = std::string(gateway::to_string(mode));
    run.segments.resize(records.size());
    gateway::parallel_for(records.size(), cfg.workers, [&](std::size_t i) {
      auto& seg = run.segments[i];
      seg.id = records[i].id;
      seg.source = records[i].source;
      seg.reference = records[i].target;
      seg.prompt = gateway::to_json(gw.effective_prompt(prompts[i], params));
      try {
        const auto result = gw.generate(prompts[i], params);
        const auto extraction = gateway::extract_final_translation(result, cfg.model_kind);
        seg.hypothesis = extraction.text;
        seg.thinking_part = result.thinking_part;
        if (result.truncated_thinking) seg.flags.emplace_back("truncated_thinking");
        if (extraction.empty_hypothesis) seg.flags.emplace_back("empty_hypothesis");
      } catch (const gateway::BackendUnavailable&) {
        throw;
      } catch (const Error& e) {
        spdlog::warn("segment {} ({}): {}", seg.id, run.mode, e.what());
        seg.flags = {"failed", "empty_hypothesis"};
      }
    });
    for (const auto& s : run.segments)
      if (s.has_flag("failed")) ++run.failed;
    if (remote && !cfg.remote_metrics.empty()) score_remote(run, cfg, *remote);

    const auto hyps = hypotheses(run);
    const auto refs = references(run);
    for (const auto& m : native) run.metrics.push_back({m->name(), m->signature(), m->corpus_score(hyps, refs), true});
    for (auto metric : cfg.remote_metrics) {
      const std::string name(scorer::to_string(metric));
      const bool higher = scorer::polarity(metric) == scorer::Polarity::higher_better;
      const metrics::MeanMetric mean(name, higher);
      run.metrics.push_back({name, "scorer:" + remote->id(),
                             mean.score_from_stats(metrics::sum_stats(remote_stats(run, name))), higher});
    }
    report.runs.push_back(std::move(run));
  }
  if (report.runs.size() == 2) report.verdicts = compare_runs(report.runs[0], report.runs[1], cfg.significance, native);

  report.manifest["benchmark"] = cfg.benchmark;
  report.manifest["segments"] = records.size();
  report.manifest["backend"] = gw.backend_id();
  if (remote) report.manifest["scorer"] = remote->id();
  report.manifest["config"] = cfg.to_json();
  if (cfg.shots > 0 && cfg.model_kind != ModelKind::finetuned_io && cfg.model_kind != ModelKind::finetuned_cot)
    report.manifest["demo_layout"] = "completed io blocks above the instruct request";
  if (benchmark.manifest.contains("content_sha256"))
    report.manifest["benchmark_sha256"] = benchmark.manifest.at("content_sha256");

  std::size_t failed = 0;
  for (const auto& run : report.runs) failed = std::max(failed, run.failed);
  report.manifest["failed_segments"] = failed;
  if (static_cast<double>(failed) > cfg.max_failure_rate * static_cast<double>(records.size())) {
    throw TooManyFailures(std::to_string(failed) + " of " + std::to_string(records.size()) +
                              " segments failed (limit " + std::to_string(cfg.max_failure_rate * 100.0) + "%)",
                          std::move(report));
  }
  return report;
}

// ---- persistence ----------------------------------------------------------

Json to_json(const SegmentResult& s, const std::string& mode) {
  Json j;
  j["run"] = mode;
  j["id"] = s.id;
  j["source"] = s.source;
  j["reference"] = s.reference;
  j["hypothesis"] = s.hypothesis;
  j["flags"] = s.flags;
  j["thinking_part"] = s.thinking_part ? Json(*s.thinking_part) : Json(nullptr);
  Json scores = Json::object();
  for (const auto& [k, v] : s.scores) scores[k] = v;
  j["scores"] = std::move(scores);
  j["prompt"] = s.prompt;
  return j;
}

Json to_json(const Verdict& v) {
  return Json{{"metric", v.metric},         {"signature", v.signature},   {"system_a", v.system_a},
              {"system_b", v.system_b},     {"score_a", v.score_a},       {"score_b", v.score_b},
              {"p_b_over_a", v.p_b_over_a}, {"p_a_over_b", v.p_a_over_b}, {"significant", v.significant},
              {"bold_a", v.bold_a},         {"bold_b", v.bold_b}};
}

Verdict verdict_from_json(const Json& j) {
  Verdict v;
  v.metric = j.at("metric").get<std::string>();
  v.signature = j.at("signature").get<std::string>();
  v.system_a = j.at("system_a").get<std::string>();
  v.system_b = j.at("system_b").get<std::string>();
  v.score_a = j.at("score_a").get<double>();
  v.score_b = j.at("score_b").get<double>();
  v.p_b_over_a = j.at("p_b_over_a").get<double>();
  v.p_a_over_b = j.at("p_a_over_b").get<double>();
  v.significant = j.at("significant").get<std::string>();
  v.bold_a = j.at("bold_a").get<bool>();
  v.bold_b = j.at("bold_b").get<bool>();
  return v;
}

namespace {

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  const auto len = text::length(s);
  if (len < width) s.append(width - len, ' ');
  return s;
}

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (widths.size() <= c) widths.push_back(0);
      widths[c] = std::max(widths[c], text::length(row[c]));
    }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) line += "  ";
      line += c + 1 < row.size() ? pad(row[c], widths[c]) : row[c];
    }
    out += std::string(text::rtrim(line)) + "\n";
  }
  return out;
}

}  // namespace

std::string format_verdicts(const std::vector<Verdict>& verdicts) {
  std::vector<std::vector<std::string>> rows{{"metric", "A", "B", "score A", "score B", "p(B>A)", "p(A>B)", "verdict"}};
  for (const auto& v : verdicts) {
    auto mark = [](double s, bool bold) { return bold ? "**" + fixed(s) + "**" : fixed(s); };
    rows.push_back({v.metric, v.system_a, v.system_b, mark(v.score_a, v.bold_a), mark(v.score_b, v.bold_b),
                    fixed(v.p_b_over_a, 4), fixed(v.p_a_over_b, 4), v.significant});
  }
  return render_table(rows);
}

std::string format_summary(const EvalReport& report) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"metric", "signature"};
  for (const auto& run : report.runs) header.push_back("thinking=" + run.mode);
  if (!report.verdicts.empty()) {
    header.push_back("p-value");
    header.push_back("verdict");
  }
  rows.push_back(header);
  if (!report.runs.empty()) {
    for (const auto& m : report.runs.front().metrics) {
      std::vector<std::string> row{m.name, m.signature};
      for (const auto& run : report.runs) {
        const auto* v = run.metric(m.name);
        row.push_back(v ? fixed(v->value) : "-");
      }
      for (const auto& v : report.verdicts) {
        if (v.metric != m.name) continue;
        row.push_back(fixed(v.significant == "a" ? v.p_a_over_b : v.p_b_over_a, 4));
        row.push_back(v.significant);
      }
      rows.push_back(std::move(row));
    }
  }
  std::string out = render_table(rows);
  for (const auto& run : report.runs) {
    std::size_t empty = 0;
    for (const auto& s : run.segments)
      if (s.has_flag("empty_hypothesis")) ++empty;
    out += "thinking=" + run.mode + ": " + std::to_string(run.segments.size()) + " segments, " +
           std::to_string(empty) + " empty, " + std::to_string(run.failed) + " failed\n";
  }
  return out;
}

void save_report(const std::filesystem::path& dir, const EvalReport& report) {
  std::filesystem::create_directories(dir);
  std::vector<Json> rows;
  for (const auto& run : report.runs)
    for (const auto& s : run.segments) rows.push_back(to_json(s, run.mode));
  write_file_atomic(dir / "segments.jsonl", dump_jsonl(rows));

  Json summary;
  summary["manifest"] = report.manifest;
  Json runs = Json::array();
  for (const auto& run : report.runs) {
    Json metrics = Json::array();
    for (const auto& m : run.metrics)
      metrics.push_back(
          {{"name", m.name}, {"signature", m.signature}, {"value", m.value}, {"higher_is_better", m.higher_is_better}});
    runs.push_back({{"mode", run.mode},
                    {"segments", run.segments.size()},
                    {"failed", run.failed},
                    {"metrics", std::move(metrics)}});
  }
  summary["runs"] = std::move(runs);
  Json verdicts = Json::array();
  for (const auto& v : report.verdicts) verdicts.push_back(to_json(v));
  summary["verdicts"] = std::move(verdicts);
  write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");
  write_file_atomic(dir / "summary.txt", format_summary(report));
}

std::vector<std::unique_ptr<metrics::CorpusMetric>> report_metrics(const EvalReport& report) {
  const auto it = report.manifest.find("config");
  return native_metrics(metric_config_from_json(it == report.manifest.end() ? Json::object() : *it));
}

EvalReport load_report(const std::filesystem::path& dir) {
  const auto summary = Json::parse(read_file(dir / "summary.json"));
  EvalReport report;
  report.manifest = summary.at("manifest");
  std::map<std::string, std::size_t> run_index;
  for (const auto& r : summary.at("runs")) {
    RunReport run;
    run.mode = r.at("mode").get<std::string>();
    run.failed = r.at("failed").get<std::size_t>();
    for (const auto& m : r.at("metrics"))
      run.metrics.push_back({m.at("name").get<std::string>(), m.at("signature").get<std::string>(),
                             m.at("value").get<double>(), m.at("higher_is_better").get<bool>()});
    run_index[run.mode] = report.runs.size();
    report.runs.push_back(std::move(run));
  }
  for (const auto& v : summary.at("verdicts")) report.verdicts.push_back(verdict_from_json(v));

  for (const auto& row : read_jsonl(dir / "segments.jsonl")) {
    const auto mode = row.at("run").get<std::string>();
    const auto it = run_index.find(mode);
    if (it == run_index.end()) throw ReportInconsistent("segment row for unknown run " + mode);
    SegmentResult s;
    s.id = row.at("id").get<std::string>();
    s.source = row.at("source").get<std::string>();
    s.reference = row.at("reference").get<std::string>();
    s.hypothesis = row.at("hypothesis").get<std::string>();
    s.flags = row.at("flags").get<std::vector<std::string>>();
    if (row.contains("thinking_part") && row["thinking_part"].is_string())
      s.thinking_part = row["thinking_part"].get<std::string>();
    for (const auto& [k, v] : row.at("scores").items()) s.scores[k] = v.get<double>();
    s.prompt = row.value("prompt", Json());
    report.runs[it->second].segments.push_back(std::move(s));
  }

  const auto native = report_metrics(report);
  const auto expected = report.manifest.value("segments", std::size_t{0});
  for (const auto& run : report.runs) {
    if (run.segments.size() != expected)
      throw ReportInconsistent("run " + run.mode + " has " + std::to_string(run.segments.size()) + " segments, manifest says " +
                               std::to_string(expected));
    const auto again = recompute_metrics(run, native);
    for (const auto& stored : run.metrics) {
      const auto m = std::find_if(again.begin(), again.end(), [&](const auto& x) { return x.name == stored.name; });
      if (m == again.end()) throw ReportInconsistent("cannot recompute " + stored.name);
      if (m->signature != stored.signature)
        throw ReportInconsistent(stored.name + " signature changed: " + stored.signature + " vs " + m->signature);
      if (std::abs(m->value - stored.value) > 1e-9)
        throw ReportInconsistent(stored.name + " for thinking=" + run.mode + " is " + fixed(stored.value, 6) +
                                 " but the segments give " + fixed(m->value, 6));
    }
  }
  return report;
}

}  // namespace thinkmt::eval
