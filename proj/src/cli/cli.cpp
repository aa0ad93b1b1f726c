#include "thinkmt/cli/cli.hpp"

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <filesystem>
#include <iomanip>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "thinkmt/core/error.hpp"
#include "thinkmt/core/jsonl.hpp"
#include "thinkmt/core/text.hpp"
#include "thinkmt/decompose/decompose.hpp"
#include "thinkmt/distill/distill.hpp"
#include "thinkmt/eval/bm25.hpp"
#include "thinkmt/eval/eval.hpp"
#include "thinkmt/forge/forge.hpp"
#include "thinkmt/gateway/backends.hpp"
#include "thinkmt/gateway/gateway.hpp"
#include "thinkmt/net/http.hpp"
#include "thinkmt/scorer/scorer.hpp"
#include "thinkmt/strategies/strategies.hpp"

namespace thinkmt::cli {

namespace fs = std::filesystem;

namespace {

class PartialFailure : public Error {
public:
  using Error::Error;
};

// ---- configuration --------------------------------------------------------

struct GlobalOptions {
  std::string config_path;
  std::string cache_dir;
  int workers = 0;
  int max_in_flight = 0;
  std::optional<double> temperature;
  std::optional<std::int64_t> seed;
  std::string log_level = "info";
};

/// The config file with relative paths resolved against its directory and
/// command-line overrides applied.
struct Context {
  Json config = Json::object();
  Json options = Json::object();

  int workers() const { return config.value("workers", 8); }

  const Json& section(const char* name) const {
    static const Json empty = Json::object();
    const auto it = config.find(name);
    return it == config.end() ? empty : *it;
  }
};

void resolve_path(Json& j, const char* key, const fs::path& base) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) return;
  const fs::path p = it->get<std::string>();
  if (p.is_relative()) *it = (base / p).lexically_normal().string();
}

Context load_context(const GlobalOptions& g) {
  Context ctx;
  if (!g.config_path.empty()) {
    try {
      ctx.config = Json::parse(read_file(g.config_path));
    } catch (const Json::parse_error& e) {
      throw InvalidArgument("config " + g.config_path + ": " + e.what());
    }
    if (!ctx.config.is_object()) throw InvalidArgument("config " + g.config_path + " is not a JSON object");
    const fs::path base = fs::path(g.config_path).parent_path();
    resolve_path(ctx.config, "cache_dir", base);
    resolve_path(ctx.config, "pool", base);
    for (const char* section : {"backend", "scorer"}) {
      if (!ctx.config.contains(section)) continue;
      resolve_path(ctx.config[section], "oracle", base);
      resolve_path(ctx.config[section], "cache_dir", base);
    }
    if (ctx.config.contains("eval")) {
      auto& ev = ctx.config["eval"];
      for (const char* key : {"file", "source_file", "reference_file", "pool", "spm_vocab"}) resolve_path(ev, key, base);
      if (ev.contains("directions"))
        for (auto& d : ev["directions"])
          for (const char* key : {"file", "source_file", "reference_file", "pool"}) resolve_path(d, key, base);
    }
  }
  if (!g.cache_dir.empty()) ctx.config["cache_dir"] = g.cache_dir;
  if (g.workers > 0) ctx.config["workers"] = g.workers;
  if (g.max_in_flight > 0) ctx.config["max_in_flight"] = g.max_in_flight;
  if (g.temperature) ctx.config["params"]["temperature"] = *g.temperature;
  if (g.seed) ctx.config["params"]["seed"] = *g.seed;
  return ctx;
}

gateway::GenerationParams params_of(const Context& ctx) {
  return gateway::GenerationParams::from_json(ctx.section("params"));
}

std::unique_ptr<gateway::Gateway> make_gateway(const Context& ctx) {
  if (!ctx.config.contains("backend")) throw InvalidArgument("config has no 'backend' section");
  auto backend = gateway::make_backend(ctx.config.at("backend"));
  gateway::GatewayOptions opts;
  opts.max_in_flight = ctx.config.value("max_in_flight", opts.max_in_flight);
  if (ctx.config.contains("cache_dir") && ctx.config["cache_dir"].is_string())
    opts.cache_dir = ctx.config["cache_dir"].get<std::string>();
  opts.cache_enabled = ctx.config.value("cache", true);
  const auto& retry = ctx.section("retry");
  opts.retry.max_retries = retry.value("max_retries", opts.retry.max_retries);
  if (retry.contains("base_delay_ms")) opts.retry.base_delay = std::chrono::milliseconds(retry["base_delay_ms"].get<int>());
  const std::string placement = ctx.config.value("nothink_placement", std::string("assistant_prefix"));
  if (placement == "raw_append")
    opts.nothink_placement = gateway::NothinkPlacement::raw_append;
  else if (placement != "assistant_prefix")
    throw InvalidArgument("nothink_placement must be assistant_prefix or raw_append");
  return std::make_unique<gateway::Gateway>(std::move(backend), opts);
}

std::shared_ptr<scorer::Scorer> make_configured_scorer(const Context& ctx, bool required) {
  if (!ctx.config.contains("scorer")) {
    if (required) throw InvalidArgument("config has no 'scorer' section");
    return nullptr;
  }
  return scorer::make_scorer(ctx.config.at("scorer"));
}

LangPair pair_from_json(const Json& j) {
  LangPair p;
  p.src = j.value("src", std::string());
  p.tgt = j.value("tgt", std::string());
  p.src_code = j.value("src_code", std::string());
  p.tgt_code = j.value("tgt_code", std::string());
  return p;
}

void write_snapshot(const fs::path& path, const std::string& command, const Context& ctx) {
  Json snap;
  snap["command"] = command;
  snap["options"] = ctx.options;
  snap["config"] = ctx.config;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path, snap.dump(2) + "\n");
}

fs::path snapshot_for(const fs::path& out) { return fs::path(out.string() + ".config.json"); }

void check_failures(std::size_t failed, std::size_t total, const std::string& what) {
  if (total > 0 && static_cast<double>(failed) > 0.1 * static_cast<double>(total))
    throw PartialFailure(std::to_string(failed) + " of " + std::to_string(total) + " " + what + " failed");
}

class Progress {
public:
  Progress(std::string label, std::size_t total) : label_(std::move(label)), total_(total) {}

  void tick() {
    const auto done = ++done_;
    const auto step = std::max<std::size_t>(1, total_ / 10);
    if (done % step == 0 || done == total_) spdlog::info("{}: {}/{}", label_, done, total_);
  }

private:
  std::string label_;
  std::size_t total_;
  std::atomic<std::size_t> done_{0};
};

// ---- traces ---------------------------------------------------------------

struct TracesOptions {
  std::string input;
  std::string out;
  std::string strategy;
  std::string tmpl;
  std::string decomp;
  std::string pool;
  int shots = -1;
  int rounds = -1;
  int phrases = -1;
};

/// Demonstrations for `record`, never including the record itself.
class DemoRetriever {
public:
  DemoRetriever(std::vector<ParallelRecord> pool, std::size_t k) : pool_(std::move(pool)), k_(k) {
    if (!pool_.empty() && k_ > 0) index_.emplace(pool_);
  }

  std::vector<ParallelRecord> demos_for(const ParallelRecord& record) const {
    std::vector<ParallelRecord> out;
    if (!index_) return out;
    for (auto i : index_->top_k(record.source, k_ + 1)) {
      if (pool_[i].id == record.id || pool_[i].source == record.source) continue;
      if (out.size() == k_) break;
      out.push_back(pool_[i]);
    }
    return out;
  }

private:
  std::vector<ParallelRecord> pool_;
  std::size_t k_;
  std::optional<eval::Bm25Index> index_;
};

std::vector<ParallelRecord> load_pool(const Context& ctx, const std::string& flag) {
  std::string path = flag;
  if (path.empty() && ctx.config.contains("pool")) path = ctx.config["pool"].get<std::string>();
  if (path.empty()) return {};
  return read_parallel_dataset(path).records;
}

int cmd_traces(const TracesOptions& o, Context& ctx, std::ostream& out) {
  const int chosen = !o.strategy.empty() + !o.tmpl.empty() + !o.decomp.empty();
  if (chosen != 1) throw InvalidArgument("traces: give exactly one of --strategy, --template, --decomp");
  ctx.options = {{"input", o.input}, {"out", o.out}};
  if (!o.strategy.empty()) ctx.options["strategy"] = o.strategy;
  if (!o.tmpl.empty()) ctx.options["template"] = o.tmpl;
  if (!o.decomp.empty()) ctx.options["decomp"] = o.decomp;

  const auto dataset = read_parallel_dataset(o.input);
  const auto& tcfg = ctx.section("traces");
  const auto params = params_of(ctx);
  auto gw = make_gateway(ctx);
  const int shots = o.shots >= 0 ? o.shots : tcfg.value("demo_shots", 5);
  const auto& records = dataset.records;
  std::vector<std::optional<Json>> rows(records.size());
  Progress progress("traces", records.size());

  if (!o.tmpl.empty()) {
    const auto& tmpl = distill::cot_template(distill::template_id_from_string(o.tmpl));
    ctx.options["template"] = std::string(distill::to_string(tmpl.id));
    const auto report = distill::distill_dataset(records, tmpl, *gw, params, ctx.workers());
    std::map<std::string, const distill::DistilledTrace*> by_id;
    for (const auto& t : report.traces) by_id[t.record_id] = &t;
    for (std::size_t i = 0; i < records.size(); ++i)
      if (auto it = by_id.find(records[i].id); it != by_id.end()) rows[i] = distill::to_json(*it->second);
  } else {
    const DemoRetriever retriever(load_pool(ctx, o.pool), static_cast<std::size_t>(std::max(shots, 0)));
    std::optional<strategies::StrategyKind> kind;
    std::optional<decompose::DecompKind> dkind;
    if (!o.strategy.empty()) {
      kind = strategies::strategy_from_string(o.strategy);
      ctx.options["strategy"] = std::string(strategies::to_string(*kind));
    } else {
      dkind = decompose::decomp_kind_from_string(o.decomp);
      ctx.options["decomp"] = std::string(decompose::to_string(*dkind));
    }
    std::shared_ptr<scorer::Scorer> maps_scorer;
    if (kind == strategies::StrategyKind::maps) maps_scorer = make_configured_scorer(ctx, false);
    const auto maps_metric = scorer::metric_from_string(tcfg.value("maps_metric", std::string("blaser_qe")));

    gateway::parallel_for(records.size(), ctx.workers(), [&](std::size_t i) {
      const auto& r = records[i];
      try {
        if (kind) {
          strategies::StrategyOptions opts;
          opts.self_refine_rounds = o.rounds >= 0 ? o.rounds : tcfg.value("self_refine_rounds", 3);
          opts.comptra_phrases = o.phrases >= 0 ? o.phrases : tcfg.value("comptra_phrases", 3);
          opts.demos = retriever.demos_for(r);
          if (maps_scorer) {
            opts.chooser = [&](const ParallelRecord& rec, const std::vector<std::string>& cands) {
              std::vector<scorer::ScoreRequest> req;
              for (const auto& c : cands) req.push_back({rec.source, c, std::nullopt, maps_metric});
              return scorer::best_index(maps_scorer->score_batch(req), scorer::polarity(maps_metric));
            };
          }
          rows[i] = strategies::to_json(strategies::run_strategy(*kind, r, *gw, params, opts));
        } else {
          decompose::DecomposeOptions dopts;
          dopts.n_phrases = o.phrases >= 0 ? o.phrases : tcfg.value("comptra_phrases", dopts.n_phrases);
          const auto segments = decompose::decompose(r, *dkind, *gw, params, dopts);
          const auto pairs = decompose::translate_aux(segments, r, *dkind, *gw, params, retriever.demos_for(r));
          if (pairs.empty()) throw Error("no auxiliary pair survived");
          Json jp = Json::array();
          for (const auto& p : pairs) jp.push_back(decompose::to_json(p));
          rows[i] = Json{{"record_id", r.id},
                         {"decomp", std::string(decompose::to_string(*dkind))},
                         {"trace", decompose::pairs_to_trace(pairs, r.pair)},
                         {"pairs", std::move(jp)}};
        }
      } catch (const gateway::BackendUnavailable&) {
        throw;
      } catch (const Error& e) {
        spdlog::warn("record {}: {}", r.id, e.what());
      }
      progress.tick();
    });
  }

  std::vector<Json> kept;
  std::size_t failed = 0;
  for (auto& row : rows) {
    if (row)
      kept.push_back(std::move(*row));
    else
      ++failed;
  }
  write_file_atomic(o.out, dump_jsonl(kept));
  write_snapshot(snapshot_for(o.out), "traces", ctx);
  out << "traces: " << kept.size() << " written, " << failed << " failed\n";
  spdlog::info("backend calls {}, cache hits {}", gw->backend_calls(), gw->cache_hits());
  check_failures(failed, records.size(), "records");
  return kOk;
}

// ---- forge ----------------------------------------------------------------

struct ForgeOptions {
  std::string condition;
  std::string input;
  std::string out;
  std::string trace_source;
  std::string strategy;
  std::string tmpl;
  std::string decomp;
  std::vector<std::string> traces;
  std::vector<std::string> aux;
  std::vector<std::string> strategy_set;
  std::string metric;
};

std::vector<Json> read_rows(const std::vector<std::string>& files) {
  std::vector<Json> rows;
  for (const auto& f : files) {
    auto part = read_jsonl(f);
    rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return rows;
}

/// Label of the generator that produced a trace row.
std::string row_source(const Json& row) {
  if (row.contains("strategy")) return row["strategy"].get<std::string>();
  if (row.contains("template")) return row["template"].get<std::string>();
  if (row.contains("decomp")) return row["decomp"].get<std::string>();
  return "";
}

std::string canonical_source(const std::string& s) {
  try {
    return std::string(distill::to_string(distill::template_id_from_string(s)));
  } catch (const InvalidArgument&) {
  }
  try {
    return std::string(strategies::to_string(strategies::strategy_from_string(s)));
  } catch (const InvalidArgument&) {
  }
  return std::string(decompose::to_string(decompose::decomp_kind_from_string(s)));
}

int cmd_forge(const ForgeOptions& o, Context& ctx, std::ostream& out) {
  ctx.options = {{"condition", o.condition}, {"input", o.input}, {"out", o.out}};
  forge::BuildPlan plan;
  plan.condition = forge::condition_from_string(o.condition);
  std::string source = o.trace_source;
  for (const auto* alt : {&o.strategy, &o.tmpl}) {
    if (alt->empty()) continue;
    if (!source.empty() && canonical_source(source) != canonical_source(*alt))
      throw InvalidArgument("conflicting trace sources: " + source + " and " + *alt);
    source = *alt;
  }
  if (!source.empty()) plan.trace_source = canonical_source(source);
  if (!o.metric.empty()) plan.selection_metric = scorer::metric_from_string(o.metric);
  for (const auto& s : o.strategy_set) plan.strategy_set.push_back(strategies::strategy_from_string(s));
  if (!o.decomp.empty()) plan.decomp = decompose::decomp_kind_from_string(o.decomp);
  if (plan.condition == forge::Condition::cotft && !plan.trace_source && plan.decomp)
    plan.trace_source = std::string(decompose::to_string(*plan.decomp));

  const auto rows = read_rows(o.traces);
  if (plan.condition == forge::Condition::ioft_boa && plan.strategy_set.empty()) {
    std::set<strategies::StrategyKind> seen;
    for (const auto& r : rows)
      if (r.contains("strategy")) seen.insert(strategies::strategy_from_string(r["strategy"].get<std::string>()));
    plan.strategy_set.assign(seen.begin(), seen.end());
  }
  plan.validate();
  ctx.options["plan"] = plan.to_json();
  ctx.options["traces"] = o.traces;
  ctx.options["aux"] = o.aux;

  const auto d = read_parallel_dataset(o.input);
  auto need = [&](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(std::string(forge::to_string(plan.condition)) + " needs " + what);
  };
  auto trace_records = [&]() {
    std::vector<strategies::TraceRecord> out_records;
    for (const auto& r : rows) out_records.push_back(strategies::trace_record_from_json(r));
    return out_records;
  };

  TrainingDataset result;
  std::shared_ptr<scorer::Scorer> sc;
  switch (plan.condition) {
    case forge::Condition::ioft: result = forge::build_ioft(d); break;
    case forge::Condition::cotft: {
      need(!rows.empty(), "--traces");
      std::map<std::string, std::string> traces;
      for (const auto& r : rows) {
        const auto label = row_source(r);
        if (!label.empty() && canonical_source(label) != *plan.trace_source)
          throw InvalidArgument("trace of " + r.at("record_id").get<std::string>() + " comes from " + label +
                                ", expected " + *plan.trace_source);
        traces[r.at("record_id").get<std::string>()] = r.at("trace").get<std::string>();
      }
      result = forge::build_cotft(d, traces, plan);
      break;
    }
    case forge::Condition::ioft_max:
    case forge::Condition::cotft_max: {
      need(!rows.empty(), "--traces");
      sc = make_configured_scorer(ctx, true);
      const auto recs = trace_records();
      result = plan.condition == forge::Condition::ioft_max ? forge::build_ioft_max(d, recs, *sc, plan)
                                                             : forge::build_cotft_max(d, recs, *sc, plan);
      break;
    }
    case forge::Condition::ioft_boa: {
      need(!rows.empty(), "--traces");
      sc = make_configured_scorer(ctx, true);
      std::map<strategies::StrategyKind, std::vector<strategies::TraceRecord>> by_kind;
      for (auto& t : trace_records()) by_kind[t.strategy].push_back(std::move(t));
      result = forge::build_ioft_boa(d, by_kind, *sc, plan);
      break;
    }
    case forge::Condition::ioft_ext: {
      std::vector<decompose::AuxPair> pairs;
      for (const auto& r : read_rows(o.aux.empty() ? o.traces : o.aux)) {
        if (r.contains("pairs")) {
          for (const auto& p : r["pairs"]) pairs.push_back(decompose::aux_pair_from_json(p));
        } else {
          pairs.push_back(decompose::aux_pair_from_json(r));
        }
      }
      need(!pairs.empty(), "--aux with auxiliary pairs");
      result = forge::build_ioft_ext(d, pairs, plan);
      break;
    }
  }
  if (sc) result.manifest["scorer"] = sc->id();
  write_dataset(o.out, result);
  write_snapshot(snapshot_for(o.out), "forge", ctx);

  out << "condition: " << forge::to_string(plan.condition) << "\n";
  out << "rows: " << result.records.size() << " (input records: " << d.records.size() << ")\n";
  out << "provenance:";
  for (const auto& [k, v] : forge::provenance_histogram(result)) out << " " << k << "=" << v;
  out << "\n";
  if (result.manifest.contains("dropped")) out << "dropped: " << result.manifest["dropped"].get<std::size_t>() << "\n";
  return kOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalOptions {
  std::string out;
  std::string input;
  std::string source_file;
  std::string reference_file;
  std::string benchmark;
  std::string pool;
  std::string thinking;
  std::string model_kind;
  std::string src, tgt, src_code, tgt_code;
  std::vector<std::string> remote_metrics;
  int shots = -1;
  long limit = -1;
  std::optional<std::uint64_t> bootstrap_seed;
};

struct Direction {
  LangPair pair;
  std::string file;
  std::string source_file;
  std::string reference_file;
  std::string pool;
};

int cmd_eval(const EvalOptions& o, Context& ctx, std::ostream& out) {
  const auto& ev = ctx.section("eval");
  ctx.options = {{"out", o.out}};

  eval::EvalConfig base;
  base.benchmark = !o.benchmark.empty() ? o.benchmark : ev.value("benchmark", std::string("benchmark"));
  base.shots = o.shots >= 0 ? o.shots : ev.value("shots", 0);
  const std::string thinking = !o.thinking.empty() ? o.thinking : ev.value("thinking", std::string());
  if (!thinking.empty()) base.thinking = eval::thinking_setting_from_string(thinking);
  const std::string kind =
      !o.model_kind.empty() ? o.model_kind : ev.value("model_kind", ctx.config.value("model_kind", std::string("instruct")));
  base.model_kind = gateway::model_kind_from_string(kind);
  base.params = params_of(ctx);
  std::vector<std::string> remote = o.remote_metrics;
  if (remote.empty() && ev.contains("remote_metrics")) remote = ev["remote_metrics"].get<std::vector<std::string>>();
  for (const auto& m : remote) base.remote_metrics.push_back(scorer::metric_from_string(m));
  if (ev.contains("bleu_tokenizer")) {
    const auto t = ev["bleu_tokenizer"].get<std::string>();
    if (t == "13a") base.bleu_tokenizer = metrics::TokenizerKind::thirteen_a;
    else if (t == "char") base.bleu_tokenizer = metrics::TokenizerKind::character;
    else if (t == "spm") base.bleu_tokenizer = metrics::TokenizerKind::external_spm;
    else throw InvalidArgument("unknown bleu_tokenizer: " + t);
    base.spm_vocab = ev.value("spm_vocab", std::string());
    base.spm_name = ev.value("spm_name", base.spm_name);
  }
  if (ev.contains("significance")) {
    const auto& s = ev["significance"];
    base.significance.n_resamples = s.value("n_resamples", base.significance.n_resamples);
    base.significance.sample_size = s.value("sample_size", base.significance.sample_size);
    base.significance.p_threshold = s.value("p_threshold", base.significance.p_threshold);
    base.significance.seed = s.value("seed", base.significance.seed);
  }
  if (o.bootstrap_seed) base.significance.seed = *o.bootstrap_seed;
  base.max_failure_rate = ev.value("max_failure_rate", base.max_failure_rate);
  base.workers = ctx.workers();
  const std::optional<std::size_t> limit =
      o.limit >= 0 ? std::optional<std::size_t>(static_cast<std::size_t>(o.limit))
                   : (ev.contains("limit") ? std::optional<std::size_t>(ev["limit"].get<std::size_t>()) : std::nullopt);

  std::vector<Direction> directions;
  const bool from_flags = !o.input.empty() || !o.source_file.empty();
  if (!from_flags && ev.contains("directions")) {
    for (const auto& dj : ev["directions"]) {
      Direction d;
      d.pair = pair_from_json(dj.contains("pair") ? dj["pair"] : dj);
      d.file = dj.value("file", std::string());
      d.source_file = dj.value("source_file", std::string());
      d.reference_file = dj.value("reference_file", std::string());
      d.pool = dj.value("pool", std::string());
      directions.push_back(std::move(d));
    }
  } else {
    Direction d;
    d.pair = pair_from_json(ctx.section("pair"));
    if (!o.src.empty()) d.pair.src = o.src;
    if (!o.tgt.empty()) d.pair.tgt = o.tgt;
    if (!o.src_code.empty()) d.pair.src_code = o.src_code;
    if (!o.tgt_code.empty()) d.pair.tgt_code = o.tgt_code;
    d.file = !o.input.empty() ? o.input : (from_flags ? "" : ev.value("file", std::string()));
    d.source_file = !o.source_file.empty() ? o.source_file : (from_flags ? "" : ev.value("source_file", std::string()));
    d.reference_file =
        !o.reference_file.empty() ? o.reference_file : (from_flags ? "" : ev.value("reference_file", std::string()));
    directions.push_back(std::move(d));
  }

  // Validate every direction before the first generation call.
  struct Job {
    eval::EvalConfig cfg;
    ParallelDataset data;
    fs::path dir;
  };
  std::vector<Job> jobs;
  std::set<std::string> dir_names;
  for (auto& d : directions) {
    d.pair.validate();
    Job job;
    job.cfg = base;
    job.cfg.pair = d.pair;
    std::string pool_path = !o.pool.empty() ? o.pool : d.pool;
    if (pool_path.empty()) pool_path = ev.value("pool", ctx.config.value("pool", std::string()));
    if (!pool_path.empty()) job.cfg.pool = read_parallel_dataset(pool_path).records;
    job.cfg.validate();
    if (!d.file.empty()) {
      job.data = eval::load_benchmark_jsonl(d.file, d.pair, base.benchmark, limit);
    } else if (!d.source_file.empty() && !d.reference_file.empty()) {
      job.data = eval::load_benchmark_text(d.source_file, d.reference_file, d.pair, base.benchmark, limit);
    } else {
      throw InvalidArgument("eval: give --input or --source-file with --reference-file");
    }
    if (directions.size() == 1) {
      job.dir = o.out;
    } else {
      const auto name = (d.pair.src_code.empty() ? d.pair.src : d.pair.src_code) + "-" +
                        (d.pair.tgt_code.empty() ? d.pair.tgt : d.pair.tgt_code);
      if (!dir_names.insert(name).second) throw InvalidArgument("eval: duplicate direction " + name);
      job.dir = fs::path(o.out) / name;
    }
    jobs.push_back(std::move(job));
  }

  auto gw = make_gateway(ctx);
  std::shared_ptr<scorer::Scorer> sc;
  if (!base.remote_metrics.empty()) sc = make_configured_scorer(ctx, true);
  Json dirs = Json::array();
  for (const auto& j : jobs) dirs.push_back(j.cfg.to_json());
  ctx.options["directions"] = std::move(dirs);

  bool partial = false;
  for (auto& job : jobs) {
    eval::EvalReport report;
    try {
      report = eval::run_eval(job.cfg, job.data, *gw, sc.get());
    } catch (const eval::TooManyFailures& e) {
      spdlog::error("{} -> {}: {}", job.cfg.pair.src, job.cfg.pair.tgt, e.what());
      report = e.report();
      partial = true;
    }
    eval::save_report(job.dir, report);
    write_snapshot(job.dir / "config.json", "eval", ctx);
    if (jobs.size() > 1) out << "== " << job.cfg.pair.src << " -> " << job.cfg.pair.tgt << "\n";
    out << eval::format_summary(report);
  }
  spdlog::info("backend calls {}, cache hits {}", gw->backend_calls(), gw->cache_hits());
  if (partial) throw PartialFailure("too many failed segments");
  return kOk;
}

// ---- compare --------------------------------------------------------------

struct CompareOptions {
  std::string a;
  std::string b;
  std::string run_a;
  std::string run_b;
  std::string out;
  std::optional<std::uint64_t> seed;
  int n_resamples = 0;
  int sample_size = 0;
};

const eval::RunReport& pick_run(const eval::EvalReport& r, const std::string& mode, const std::string& label) {
  if (mode.empty()) {
    if (r.runs.size() != 1) throw InvalidArgument(label + " holds several runs; choose one with --run-" + label);
    return r.runs.front();
  }
  for (const auto& run : r.runs)
    if (run.mode == mode) return run;
  throw InvalidArgument(label + " has no run with thinking=" + mode);
}

int cmd_compare(const CompareOptions& o, Context& ctx, std::ostream& out) {
  ctx.options = {{"a", o.a}, {"b", o.b}};
  const auto ra = eval::load_report(o.a);
  const auto rb = eval::load_report(o.b);
  const auto& run_a = pick_run(ra, o.run_a, "a");
  const auto& run_b = pick_run(rb, o.run_b, "b");
  const auto native = eval::report_metrics(ra);
  const auto native_b = eval::report_metrics(rb);
  for (std::size_t i = 0; i < native.size(); ++i)
    if (native[i]->signature() != native_b[i]->signature())
      throw InvalidArgument("reports use different metric configurations: " + native[i]->signature() + " vs " +
                            native_b[i]->signature());

  metrics::SignificanceConfig cfg;
  const auto& s = ctx.section("eval").value("significance", Json::object());
  cfg.n_resamples = s.value("n_resamples", cfg.n_resamples);
  cfg.sample_size = s.value("sample_size", cfg.sample_size);
  cfg.p_threshold = s.value("p_threshold", cfg.p_threshold);
  cfg.seed = s.value("seed", cfg.seed);
  if (o.seed) cfg.seed = *o.seed;
  if (o.n_resamples > 0) cfg.n_resamples = o.n_resamples;
  if (o.sample_size > 0) cfg.sample_size = o.sample_size;

  auto verdicts = eval::compare_runs(run_a, run_b, cfg, native);
  for (auto& v : verdicts) {
    v.system_a = "A:" + fs::path(o.a).filename().string() + "/" + run_a.mode;
    v.system_b = "B:" + fs::path(o.b).filename().string() + "/" + run_b.mode;
  }
  const auto table = eval::format_verdicts(verdicts);
  out << table;
  if (!o.out.empty()) {
    Json j;
    j["a"] = o.a;
    j["b"] = o.b;
    j["significance"] = {{"n_resamples", cfg.n_resamples},
                         {"sample_size", cfg.sample_size},
                         {"p_threshold", cfg.p_threshold},
                         {"seed", cfg.seed}};
    Json vs = Json::array();
    for (const auto& v : verdicts) vs.push_back(eval::to_json(v));
    j["verdicts"] = std::move(vs);
    const fs::path path = o.out;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file_atomic(path, j.dump(2) + "\n");
    write_file_atomic(fs::path(o.out + ".txt"), table);
    write_snapshot(snapshot_for(o.out), "compare", ctx);
  }
  return kOk;
}

// ---- score ----------------------------------------------------------------

struct ScoreOptions {
  std::string metric;
  std::string input;
  std::string out;
  bool healthz = false;
};

int cmd_score(const ScoreOptions& o, Context& ctx, std::ostream& out) {
  if (o.healthz) {
    auto sc = make_configured_scorer(ctx, true);
    auto* remote = dynamic_cast<scorer::RemoteScorer*>(sc.get());
    if (!remote) throw InvalidArgument("--healthz needs a remote scorer");
    out << remote->health().dump() << "\n";
    return kOk;
  }
  if (o.metric.empty() || o.input.empty()) throw InvalidArgument("score: --metric and --input are required");
  const auto metric = scorer::metric_from_string(o.metric);
  std::shared_ptr<scorer::Scorer> sc = make_configured_scorer(ctx, !scorer::is_native(metric));
  if (!sc) sc = std::make_shared<scorer::NativeScorer>();
  ctx.options = {{"metric", o.metric}, {"input", o.input}, {"out", o.out}, {"scorer", sc->id()}};

  std::vector<scorer::ScoreRequest> requests;
  for (const auto& row : read_jsonl(o.input)) {
    auto field = [&](const char* a, const char* b) -> std::optional<std::string> {
      for (const char* k : {a, b})
        if (row.contains(k) && row[k].is_string()) return row[k].get<std::string>();
      return std::nullopt;
    };
    scorer::ScoreRequest r;
    r.metric = metric;
    r.source = field("source", "src").value_or("");
    r.hypothesis = field("hypothesis", "hyp").value_or("");
    if (scorer::needs_reference(metric)) r.reference = field("reference", "ref");
    r.validate();
    requests.push_back(std::move(r));
  }
  const auto scores = sc->score_batch(requests);
  std::vector<Json> rows;
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    rows.push_back({{"index", i}, {"metric", o.metric}, {"score", scores[i]}});
    sum += scores[i];
  }
  if (o.out.empty()) {
    out << dump_jsonl(rows);
  } else {
    write_file_atomic(o.out, dump_jsonl(rows));
    write_snapshot(snapshot_for(o.out), "score", ctx);
  }
  if (!scores.empty())
    spdlog::info("{} segments, mean {} {:.4f}", scores.size(), o.metric, sum / static_cast<double>(scores.size()));
  return kOk;
}

/// Routes spdlog to `err` for the lifetime of the guard.
class LoggingScope {
public:
  LoggingScope(const std::string& level, std::ostream& err) : previous_(spdlog::default_logger()) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    auto logger = std::make_shared<spdlog::logger>("thinkmt", sink);
    logger->set_pattern("[%l] %v");
    logger->set_level(spdlog::level::from_str(level));
    spdlog::set_default_logger(logger);
  }
  ~LoggingScope() { spdlog::set_default_logger(previous_); }
  LoggingScope(const LoggingScope&) = delete;
  LoggingScope& operator=(const LoggingScope&) = delete;

private:
  std::shared_ptr<spdlog::logger> previous_;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"thinkmt: translation trace generation, dataset building and evaluation", "thinkmt"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--cache-dir", g.cache_dir, "response cache directory");
  app.add_option("--workers", g.workers, "parallel records")->check(CLI::PositiveNumber);
  app.add_option("--max-in-flight", g.max_in_flight, "concurrent backend requests")->check(CLI::PositiveNumber);
  app.add_option("--temperature", g.temperature, "sampling temperature");
  app.add_option("--seed", g.seed, "generation seed");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  const std::vector<std::string> strategy_names{"maps", "sbys", "tear", "selfrefine", "comptra"};
  const std::vector<std::string> decomp_names{"p", "sp", "h", "comptra"};
  const std::vector<std::string> template_names{"T1", "T2", "T3", "T4", "T5", "T6"};

  TracesOptions to;
  auto* traces = app.add_subcommand("traces", "generate CoT traces, strategy traces or decompositions");
  traces->add_option("--input", to.input, "parallel dataset (JSONL)")->required()->check(CLI::ExistingFile);
  traces->add_option("--out", to.out, "output JSONL")->required();
  traces->add_option("--strategy", to.strategy, "multi-step strategy")
      ->check(CLI::IsMember(strategy_names, CLI::ignore_case));
  traces->add_option("--template", to.tmpl, "CoT template")->check(CLI::IsMember(template_names, CLI::ignore_case));
  traces->add_option("--decomp", to.decomp, "decomposition kind")->check(CLI::IsMember(decomp_names, CLI::ignore_case));
  traces->add_option("--pool", to.pool, "demonstration pool (JSONL)")->check(CLI::ExistingFile);
  traces->add_option("--shots", to.shots, "retrieved demonstrations per record")->check(CLI::NonNegativeNumber);
  traces->add_option("--rounds", to.rounds, "Self-Refine rounds")->check(CLI::PositiveNumber);
  traces->add_option("--phrases", to.phrases, "CompTra phrases")->check(CLI::PositiveNumber);

  ForgeOptions fo;
  auto* forge_cmd = app.add_subcommand("forge", "build a fine-tuning dataset");
  forge_cmd->add_option("--condition", fo.condition, "training condition")
      ->required()
      ->check(CLI::IsMember({"ioft", "cotft", "ioft-max", "cotft-max", "ioft-boa", "ioft-ext"}, CLI::ignore_case));
  forge_cmd->add_option("--input", fo.input, "parallel dataset (JSONL)")->required()->check(CLI::ExistingFile);
  forge_cmd->add_option("--out", fo.out, "output training JSONL")->required();
  forge_cmd->add_option("--trace-source", fo.trace_source, "template, strategy or decomposition of the traces");
  forge_cmd->add_option("--strategy", fo.strategy, "strategy of the traces")
      ->check(CLI::IsMember(strategy_names, CLI::ignore_case));
  forge_cmd->add_option("--template", fo.tmpl, "CoT template of the traces")
      ->check(CLI::IsMember(template_names, CLI::ignore_case));
  forge_cmd->add_option("--decomp", fo.decomp, "decomposition kind")
      ->check(CLI::IsMember(decomp_names, CLI::ignore_case));
  forge_cmd->add_option("--traces", fo.traces, "trace files from `traces`")->check(CLI::ExistingFile);
  forge_cmd->add_option("--aux", fo.aux, "auxiliary pair files")->check(CLI::ExistingFile);
  forge_cmd->add_option("--strategy-set", fo.strategy_set, "strategies pooled by ioft-boa")
      ->delimiter(',')
      ->check(CLI::IsMember(strategy_names, CLI::ignore_case));
  forge_cmd->add_option("--metric", fo.metric, "selection metric")
      ->check(CLI::IsMember({"blaser_qe", "cometkiwi"}, CLI::ignore_case));

  EvalOptions eo;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a model on a benchmark");
  eval_cmd->add_option("--out", eo.out, "report directory")->required();
  eval_cmd->add_option("--input", eo.input, "benchmark JSONL")->check(CLI::ExistingFile);
  eval_cmd->add_option("--source-file", eo.source_file, "one source sentence per line")->check(CLI::ExistingFile);
  eval_cmd->add_option("--reference-file", eo.reference_file, "one reference per line")->check(CLI::ExistingFile);
  eval_cmd->add_option("--benchmark", eo.benchmark, "benchmark name");
  eval_cmd->add_option("--limit", eo.limit, "first N segments only")->check(CLI::NonNegativeNumber);
  eval_cmd->add_option("--shots", eo.shots, "BM25-retrieved demonstrations")->check(CLI::NonNegativeNumber);
  eval_cmd->add_option("--pool", eo.pool, "demonstration pool (JSONL)")->check(CLI::ExistingFile);
  eval_cmd->add_option("--thinking", eo.thinking, "on, off, both or n/a")
      ->check(CLI::IsMember({"on", "off", "both", "n/a"}));
  eval_cmd->add_option("--model-kind", eo.model_kind, "thinking, instruct, finetuned-cot, finetuned-io")
      ->check(CLI::IsMember({"thinking", "instruct", "finetuned-cot", "finetuned-io"}));
  eval_cmd->add_option("--src", eo.src, "source language name");
  eval_cmd->add_option("--tgt", eo.tgt, "target language name");
  eval_cmd->add_option("--src-code", eo.src_code, "source language code");
  eval_cmd->add_option("--tgt-code", eo.tgt_code, "target language code");
  eval_cmd->add_option("--remote-metric", eo.remote_metrics, "neural metrics scored by the configured scorer")
      ->check(CLI::IsMember({"blaser_qe", "cometkiwi", "metricx_hybrid"}));
  eval_cmd->add_option("--bootstrap-seed", eo.bootstrap_seed, "paired bootstrap seed");

  CompareOptions co;
  auto* compare = app.add_subcommand("compare", "paired significance between two reports");
  compare->add_option("--a", co.a, "report directory A")->required()->check(CLI::ExistingDirectory);
  compare->add_option("--b", co.b, "report directory B")->required()->check(CLI::ExistingDirectory);
  compare->add_option("--run-a", co.run_a, "thinking mode of the run in A");
  compare->add_option("--run-b", co.run_b, "thinking mode of the run in B");
  compare->add_option("--out", co.out, "verdict JSON");
  compare->add_option("--bootstrap-seed", co.seed, "paired bootstrap seed");
  compare->add_option("--n-resamples", co.n_resamples, "bootstrap resamples")->check(CLI::PositiveNumber);
  compare->add_option("--sample-size", co.sample_size, "segments per resample")->check(CLI::PositiveNumber);

  ScoreOptions so;
  auto* score = app.add_subcommand("score", "score segments with a metric");
  score->add_option("--metric", so.metric, "metric id")
      ->check(CLI::IsMember({"blaser_qe", "cometkiwi", "metricx_hybrid", "bleu_sent", "chrfpp_sent"}));
  score->add_option("--input", so.input, "JSONL rows with source, hypothesis and reference")
      ->check(CLI::ExistingFile);
  score->add_option("--out", so.out, "output JSONL (stdout when omitted)");
  score->add_flag("--healthz", so.healthz, "query the remote scorer's health endpoint");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    err << (sub ? sub->help() : app.help());
    return kConfigError;
  }

  const LoggingScope logging(g.log_level, err);
  try {
    auto ctx = load_context(g);
    if (*traces) return cmd_traces(to, ctx, out);
    if (*forge_cmd) return cmd_forge(fo, ctx, out);
    if (*eval_cmd) return cmd_eval(eo, ctx, out);
    if (*compare) return cmd_compare(co, ctx, out);
    if (*score) return cmd_score(so, ctx, out);
    return kConfigError;
  } catch (const PartialFailure& e) {
    err << "error: " << e.what() << "\n";
    return kPartialFailure;
  } catch (const gateway::BackendUnavailable& e) {
    err << "backend error: " << e.what() << "\n";
    return kBackendError;
  } catch (const gateway::BackendError& e) {
    err << "backend error: " << e.what() << "\n";
    return kBackendError;
  } catch (const scorer::RemoteUnavailable& e) {
    err << "scorer error: " << e.what() << "\n";
    return kBackendError;
  } catch (const net::ConnectionError& e) {
    err << "connection error: " << e.what() << "\n";
    return kBackendError;
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << "\n";
    return kConfigError;
  } catch (const eval::ReportInconsistent& e) {
    err << "report error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "file error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace thinkmt::cli
