#include "thinkmt/forge/forge.hpp"

#include <spdlog/spdlog.h>

#include <charconv>
#include <set>

#include "thinkmt/core/prompts.hpp"
#include "thinkmt/core/text.hpp"
#include "thinkmt/distill/distill.hpp"

namespace thinkmt::forge {

using strategies::StrategyKind;
using strategies::TraceRecord;

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::ioft: return "ioft";
    case Condition::cotft: return "cotft";
    case Condition::ioft_max: return "ioft-max";
    case Condition::cotft_max: return "cotft-max";
    case Condition::ioft_boa: return "ioft-boa";
    case Condition::ioft_ext: return "ioft-ext";
  }
  return "ioft";
}

Condition condition_from_string(std::string_view s) {
  for (auto c : {Condition::ioft, Condition::cotft, Condition::ioft_max, Condition::cotft_max, Condition::ioft_boa,
                 Condition::ioft_ext})
    if (to_string(c) == s) return c;
  throw InvalidArgument("unknown condition: " + std::string(s));
}

namespace {

enum class SourceKind { none, cot_template, strategy, decomposition };

SourceKind classify_source(const std::string& s) {
  try {
    distill::template_id_from_string(s);
    return SourceKind::cot_template;
  } catch (const InvalidArgument&) {
  }
  try {
    strategies::strategy_from_string(s);
    return SourceKind::strategy;
  } catch (const InvalidArgument&) {
  }
  try {
    decompose::decomp_kind_from_string(s);
    return SourceKind::decomposition;
  } catch (const InvalidArgument&) {
  }
  return SourceKind::none;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

TrainingExample io_row(const ParallelRecord& r, std::string target) {
  TrainingExample ex;
  ex.id = r.id;
  ex.prompt = build_io_prompt(r);
  ex.completion = std::move(target);
  ex.mode = TrainingMode::io;
  ex.meta["source_chars"] = std::to_string(text::length(r.source));
  return ex;
}

void finish_manifest(TrainingDataset& out, const ParallelDataset& d, const BuildPlan& plan) {
  out.manifest["condition"] = std::string(to_string(plan.condition));
  out.manifest["plan"] = plan.to_json();
  out.manifest["input_records"] = d.records.size();
  if (d.manifest.contains("content_sha256")) out.manifest["input_sha256"] = d.manifest.at("content_sha256");
  Json hist = Json::object();
  for (const auto& [k, v] : provenance_histogram(out)) hist[k] = v;
  out.manifest["provenance"] = std::move(hist);
  for (auto& row : out.records) row.meta["completion_chars"] = std::to_string(text::length(row.completion));
  out.validate();
}

std::map<std::string, const TraceRecord*> index_traces(const ParallelDataset& d, const std::vector<TraceRecord>& traces,
                                                       std::optional<StrategyKind> expected) {
  std::set<std::string> ids;
  for (const auto& r : d.records) ids.insert(r.id);
  std::map<std::string, const TraceRecord*> out;
  for (const auto& t : traces) {
    if (expected && t.strategy != *expected)
      throw InvalidArgument("trace for " + t.record_id + " comes from " + std::string(strategies::to_string(t.strategy)) +
                            ", expected " + std::string(strategies::to_string(*expected)));
    if (!ids.count(t.record_id)) {
      spdlog::warn("ignoring trace for unknown record {}", t.record_id);
      continue;
    }
    if (!out.emplace(t.record_id, &t).second) throw InvalidArgument("duplicate trace for record " + t.record_id);
  }
  return out;
}

struct Choice {
  std::string text;
  scorer::Provenance provenance;
  double score = 0.0;
  bool scored = false;
};

/// One joint scoring pass over every record's candidate list.
std::vector<Choice> choose_all(const ParallelDataset& d, const std::vector<std::vector<std::string>>& attempts,
                               scorer::Scorer& sc, scorer::MetricId metric) {
  if (scorer::needs_reference(metric))
    throw InvalidArgument(std::string(scorer::to_string(metric)) + " needs a reference; selection requires a QE metric");
  std::vector<scorer::ScoreRequest> requests;
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    requests.push_back({d.records[i].source, d.records[i].target, std::nullopt, metric});
    for (const auto& a : attempts[i]) requests.push_back({d.records[i].source, a, std::nullopt, metric});
  }
  std::vector<Choice> out(d.records.size());
  for (std::size_t i = 0; i < d.records.size(); ++i) out[i].text = d.records[i].target;

  std::vector<double> scores;
  try {
    scores = sc.score_batch(requests);
    if (scores.size() != requests.size()) throw Error("scorer returned the wrong number of scores");
  } catch (const Error& e) {
    spdlog::warn("scoring failed, keeping every ground-truth target: {}", e.what());
    return out;
  }
  std::size_t pos = 0;
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const std::vector<double> local(scores.begin() + static_cast<std::ptrdiff_t>(pos),
                                    scores.begin() + static_cast<std::ptrdiff_t>(pos + 1 + attempts[i].size()));
    pos += local.size();
    const auto best = scorer::best_index(local, scorer::polarity(metric));
    out[i].scored = true;
    out[i].score = local[best];
    if (best > 0) {
      out[i].text = attempts[i][best - 1];
      out[i].provenance.attempt = best - 1;
    }
  }
  return out;
}

void annotate(TrainingExample& row, const Choice& c, const scorer::Scorer& sc, scorer::MetricId metric) {
  row.meta["provenance"] = c.provenance.to_string();
  if (c.scored) {
    row.meta["score"] = format_double(c.score);
    row.meta["selection_metric"] = std::string(scorer::to_string(metric));
    row.meta["scorer"] = sc.id();
  } else {
    row.meta["selection"] = "fallback";
  }
}

}  // namespace

void BuildPlan::validate() const {
  auto require_source = [&](SourceKind kind, const char* what) {
    if (!trace_source) throw InvalidArgument(std::string(to_string(condition)) + " needs a trace source (" + what + ")");
    const auto k = classify_source(*trace_source);
    if (k == SourceKind::none) throw InvalidArgument("unknown trace source: " + *trace_source);
    if (kind != SourceKind::none && k != kind)
      throw InvalidArgument(std::string(to_string(condition)) + " needs " + what + ", got " + *trace_source);
  };
  switch (condition) {
    case Condition::ioft: break;
    case Condition::cotft: require_source(SourceKind::none, "a template, strategy or decomposition"); break;
    case Condition::ioft_max:
    case Condition::cotft_max: require_source(SourceKind::strategy, "a strategy"); break;
    case Condition::ioft_boa:
      if (strategy_set.empty()) throw InvalidArgument("ioft-boa needs a strategy set");
      break;
    case Condition::ioft_ext:
      if (!decomp) throw InvalidArgument("ioft-ext needs a decomposition kind");
      break;
  }
}

Json BuildPlan::to_json() const {
  Json j;
  j["condition"] = std::string(to_string(condition));
  j["trace_source"] = trace_source ? Json(*trace_source) : Json(nullptr);
  j["selection_metric"] = std::string(scorer::to_string(selection_metric));
  Json set = Json::array();
  for (auto s : strategy_set) set.push_back(std::string(strategies::to_string(s)));
  j["strategy_set"] = std::move(set);
  j["decomp"] = decomp ? Json(std::string(decompose::to_string(*decomp))) : Json(nullptr);
  return j;
}

TrainingDataset build_ioft(const ParallelDataset& d) {
  TrainingDataset out;
  for (const auto& r : d.records) {
    auto row = io_row(r, r.target);
    row.meta["provenance"] = "ground_truth";
    out.records.push_back(std::move(row));
  }
  BuildPlan plan;
  finish_manifest(out, d, plan);
  return out;
}

TrainingDataset build_cotft(const ParallelDataset& d, const std::map<std::string, std::string>& traces,
                            const BuildPlan& plan) {
  plan.validate();
  TrainingDataset out;
  Json dropped = Json::array();
  for (const auto& r : d.records) {
    const auto it = traces.find(r.id);
    if (it == traces.end() || text::trim(it->second).empty()) {
      spdlog::warn("no trace for record {}; dropped", r.id);
      dropped.push_back(r.id);
      continue;
    }
    TrainingExample row = io_row(r, format_cot_target(it->second, r.target));
    row.mode = TrainingMode::cot;
    row.meta["provenance"] = "ground_truth";
    row.meta["trace_source"] = plan.trace_source.value_or("");
    out.records.push_back(std::move(row));
  }
  out.manifest["dropped"] = dropped.size();
  out.manifest["dropped_ids"] = std::move(dropped);
  finish_manifest(out, d, plan);
  return out;
}

TrainingDataset build_ioft_max(const ParallelDataset& d, const std::vector<TraceRecord>& traces, scorer::Scorer& sc,
                               const BuildPlan& plan) {
  plan.validate();
  const auto by_id = index_traces(d, traces, strategies::strategy_from_string(*plan.trace_source));
  std::vector<std::vector<std::string>> attempts(d.records.size());
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    if (auto it = by_id.find(d.records[i].id); it != by_id.end()) attempts[i] = it->second->attempts;
  }
  const auto choices = choose_all(d, attempts, sc, plan.selection_metric);
  TrainingDataset out;
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    auto row = io_row(d.records[i], choices[i].text);
    annotate(row, choices[i], sc, plan.selection_metric);
    out.records.push_back(std::move(row));
  }
  finish_manifest(out, d, plan);
  return out;
}

TrainingDataset build_cotft_max(const ParallelDataset& d, const std::vector<TraceRecord>& traces, scorer::Scorer& sc,
                                const BuildPlan& plan) {
  plan.validate();
  const auto by_id = index_traces(d, traces, strategies::strategy_from_string(*plan.trace_source));
  std::vector<std::vector<std::string>> attempts(d.records.size());
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    if (auto it = by_id.find(d.records[i].id); it != by_id.end()) attempts[i] = it->second->attempts;
  }
  const auto choices = choose_all(d, attempts, sc, plan.selection_metric);
  TrainingDataset out;
  Json dropped = Json::array();
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& r = d.records[i];
    const auto it = by_id.find(r.id);
    if (it == by_id.end() || text::trim(it->second->trace).empty()) {
      spdlog::warn("no trace for record {}; dropped", r.id);
      dropped.push_back(r.id);
      continue;
    }
    auto row = io_row(r, format_cot_target(it->second->trace, choices[i].text));
    row.mode = TrainingMode::cot;
    annotate(row, choices[i], sc, plan.selection_metric);
    out.records.push_back(std::move(row));
  }
  out.manifest["dropped"] = dropped.size();
  out.manifest["dropped_ids"] = std::move(dropped);
  finish_manifest(out, d, plan);
  return out;
}

TrainingDataset build_ioft_boa(const ParallelDataset& d, const std::map<StrategyKind, std::vector<TraceRecord>>& traces,
                               scorer::Scorer& sc, const BuildPlan& plan) {
  plan.validate();
  std::vector<std::vector<std::string>> attempts(d.records.size());
  std::vector<std::vector<std::string>> origin(d.records.size());
  for (auto kind : plan.strategy_set) {
    const auto it = traces.find(kind);
    if (it == traces.end())
      throw InvalidArgument("no traces supplied for strategy " + std::string(strategies::to_string(kind)));
    const auto by_id = index_traces(d, it->second, kind);
    for (std::size_t i = 0; i < d.records.size(); ++i) {
      const auto t = by_id.find(d.records[i].id);
      if (t == by_id.end()) continue;
      for (const auto& a : t->second->attempts) {
        if (std::find(attempts[i].begin(), attempts[i].end(), a) != attempts[i].end()) continue;
        attempts[i].push_back(a);
        origin[i].emplace_back(strategies::to_string(kind));
      }
    }
  }
  const auto choices = choose_all(d, attempts, sc, plan.selection_metric);
  TrainingDataset out;
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    auto row = io_row(d.records[i], choices[i].text);
    annotate(row, choices[i], sc, plan.selection_metric);
    if (choices[i].provenance.attempt) row.meta["strategy"] = origin[i][*choices[i].provenance.attempt];
    row.meta["candidates"] = std::to_string(attempts[i].size() + 1);
    out.records.push_back(std::move(row));
  }
  out.manifest["candidate_scoring"] = "joint over the union of attempts";
  finish_manifest(out, d, plan);
  return out;
}

std::string aux_row_id(const std::string& parent_id, decompose::DecompKind kind, std::size_t index) {
  return parent_id + "::aux:" + std::string(decompose::to_string(kind)) + ":" + std::to_string(index);
}

TrainingDataset build_ioft_ext(const ParallelDataset& d, const std::vector<decompose::AuxPair>& aux,
                               const BuildPlan& plan) {
  plan.validate();
  std::map<std::string, std::vector<const decompose::AuxPair*>> by_parent;
  for (const auto& p : aux) {
    if (p.origin != *plan.decomp)
      throw InvalidArgument("aux pair of " + p.parent_id + " is " + std::string(decompose::to_string(p.origin)) +
                            ", plan wants " + std::string(decompose::to_string(*plan.decomp)));
    by_parent[p.parent_id].push_back(&p);
  }
  TrainingDataset out;
  std::size_t aux_rows = 0;
  std::set<std::string> known;
  for (const auto& r : d.records) {
    known.insert(r.id);
    auto row = io_row(r, r.target);
    row.meta["provenance"] = "ground_truth";
    out.records.push_back(std::move(row));
  }
  for (const auto& r : d.records) {
    const auto it = by_parent.find(r.id);
    if (it == by_parent.end()) continue;
    std::size_t index = 0;
    for (const auto* p : it->second) {
      ParallelRecord aux_record{aux_row_id(r.id, p->origin, ++index), p->text, p->translation, r.pair};
      auto row = io_row(aux_record, p->translation);
      row.meta["provenance"] = "aux";
      row.meta["parent_id"] = r.id;
      row.meta["origin"] = std::string(decompose::to_string(p->origin));
      out.records.push_back(std::move(row));
      ++aux_rows;
    }
  }
  for (const auto& [parent, _] : by_parent)
    if (!known.count(parent)) throw InvalidArgument("aux pairs reference unknown record " + parent);
  out.manifest["aux_rows"] = aux_rows;
  finish_manifest(out, d, plan);
  return out;
}

std::map<std::string, std::size_t> provenance_histogram(const TrainingDataset& d) {
  std::map<std::string, std::size_t> out;
  for (const auto& r : d.records) {
    const auto it = r.meta.find("provenance");
    ++out[it == r.meta.end() ? "unknown" : it->second];
  }
  return out;
}

}  // namespace thinkmt::forge
