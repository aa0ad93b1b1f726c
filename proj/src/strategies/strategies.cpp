#include "thinkmt/strategies/strategies.hpp"

#include <algorithm>

#include "thinkmt/core/prompts.hpp"
#include "thinkmt/core/resources.hpp"
#include "thinkmt/core/text.hpp"
#include "thinkmt/decompose/decompose.hpp"

namespace thinkmt::strategies {

using gateway::Gateway;
using gateway::GenerationParams;
using gateway::Prompt;

std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::maps: return "MAPS";
    case StrategyKind::sbys: return "SBYS";
    case StrategyKind::tear: return "TEaR";
    case StrategyKind::self_refine: return "SelfRefine";
    case StrategyKind::comptra: return "CompTra";
  }
  return "MAPS";
}

StrategyKind strategy_from_string(std::string_view s) {
  const auto wanted = text::to_lower_ascii(s);
  for (auto k : kAllStrategies)
    if (text::to_lower_ascii(to_string(k)) == wanted) return k;
  throw InvalidArgument("unknown strategy: " + std::string(s));
}

Json to_json(const TraceRecord& t) {
  Json steps = Json::array();
  for (const auto& s : t.steps) steps.push_back(to_json(s));
  return Json{{"record_id", t.record_id},   {"strategy", std::string(to_string(t.strategy))},
              {"steps", std::move(steps)},  {"trace", t.trace},
              {"attempts", t.attempts},     {"final_translation", t.final_translation}};
}

TraceRecord trace_record_from_json(const Json& j) {
  TraceRecord t;
  t.record_id = j.at("record_id").get<std::string>();
  t.strategy = strategy_from_string(j.at("strategy").get<std::string>());
  for (const auto& s : j.at("steps")) t.steps.push_back(step_from_json(s));
  t.trace = j.at("trace").get<std::string>();
  t.attempts = j.at("attempts").get<std::vector<std::string>>();
  t.final_translation = j.value("final_translation", "");
  return t;
}

namespace {

const StepOutput& step(const std::vector<StepOutput>& steps, std::string_view name) {
  for (const auto& s : steps)
    if (s.step_name == name) return s;
  throw InvalidArgument("trace is missing step '" + std::string(name) + "'");
}

std::vector<StepOutput> numbered_steps(const std::vector<StepOutput>& steps, std::string_view prefix) {
  std::vector<StepOutput> out;
  for (std::size_t i = 1;; ++i) {
    const std::string name = std::string(prefix) + std::to_string(i);
    auto it = std::find_if(steps.begin(), steps.end(), [&](const StepOutput& s) { return s.step_name == name; });
    if (it == steps.end()) break;
    out.push_back(*it);
  }
  return out;
}

std::vector<decompose::AuxPair> comptra_pairs(const std::vector<StepOutput>& steps) {
  auto last = std::find_if(steps.rbegin(), steps.rend(), [](const StepOutput& s) {
    return s.step_name == "decompose" || s.step_name == "decompose_retry";
  });
  if (last == steps.rend()) throw InvalidArgument("trace is missing step 'decompose'");
  const auto phrases = text::split_lines(last->parsed);
  std::vector<decompose::AuxPair> pairs;
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    const std::string name = "translate_" + std::to_string(i + 1);
    auto it = std::find_if(steps.begin(), steps.end(), [&](const StepOutput& s) { return s.step_name == name; });
    if (it == steps.end()) continue;
    pairs.push_back({std::string(phrases[i]), it->parsed, decompose::DecompKind::comptra_phrases, ""});
  }
  return pairs;
}

}  // namespace

std::string assemble_self_refine(const std::vector<std::string>& candidates) {
  if (candidates.size() < 2) throw InvalidArgument("self-refine trace needs a draft and at least one refinement");
  std::string out = "Here is a draft translation\n\n1. " + candidates[0] + "\n\n";
  const std::size_t rounds = candidates.size() - 1;
  for (std::size_t r = 1; r <= rounds; ++r) {
    if (r == 1) {
      out += "Let's improve it and write a better translation";
    } else if (r == rounds) {
      out += "Let's improve it one last time and write a better translation";
    } else {
      out += "Let's further improve it and write a better translation";
    }
    out += "\n\n" + std::to_string(r + 1) + ". " + candidates[r] + "\n\n";
  }
  out += "We will choose the best of these translations and further improve it to obtain the final, polished translation.";
  return out;
}

std::string assemble_trace(StrategyKind kind, const LangPair& pair, const std::vector<StepOutput>& steps) {
  switch (kind) {
    case StrategyKind::maps:
      return resources::render(resources::get("traces/maps.txt"),
                               {{"src", pair.src},
                                {"tgt", pair.tgt},
                                {"zero-shot translation", step(steps, "zero_shot").parsed},
                                {"demonstrations", step(steps, "demonstrations").parsed},
                                {"demonstrations-inspired translation", step(steps, "demonstrations_draft").parsed},
                                {"keywords", step(steps, "keywords").parsed},
                                {"keywords-inspired translation", step(steps, "keywords_draft").parsed},
                                {"topics", step(steps, "topics").parsed},
                                {"topics-inspired translation", step(steps, "topics_draft").parsed}});
    case StrategyKind::sbys:
      return resources::render(resources::get("traces/sbys.txt"),
                               {{"predrafting research", step(steps, "research").parsed},
                                {"draft translation", step(steps, "draft").parsed},
                                {"refinement", step(steps, "refinement").parsed},
                                {"proofreading", step(steps, "proofreading").parsed}});
    case StrategyKind::tear:
      return resources::render(resources::get("traces/tear.txt"),
                               {{"draft translation", step(steps, "draft").parsed},
                                {"MQM annotations", step(steps, "annotation").parsed},
                                {"refinement", step(steps, "refinement").parsed}});
    case StrategyKind::self_refine:
      return assemble_self_refine(attempts_from_steps(kind, steps));
    case StrategyKind::comptra: {
      const auto pairs = comptra_pairs(steps);
      if (pairs.empty()) throw InvalidArgument("CompTra trace has no translated phrase");
      return decompose::pairs_to_trace(pairs, pair);
    }
  }
  throw InvalidArgument("unknown strategy");
}

std::vector<std::string> attempts_from_steps(StrategyKind kind, const std::vector<StepOutput>& steps) {
  switch (kind) {
    case StrategyKind::maps:
      return {step(steps, "zero_shot").parsed, step(steps, "demonstrations_draft").parsed,
              step(steps, "keywords_draft").parsed, step(steps, "topics_draft").parsed};
    case StrategyKind::sbys:
      return {step(steps, "draft").parsed, step(steps, "refinement").parsed, step(steps, "proofreading").parsed};
    case StrategyKind::tear:
      return {step(steps, "draft").parsed, step(steps, "refinement").parsed};
    case StrategyKind::self_refine: {
      std::vector<std::string> out{step(steps, "draft").parsed};
      for (const auto& s : numbered_steps(steps, "refine_")) out.push_back(s.parsed);
      return out;
    }
    case StrategyKind::comptra:
      return {};
  }
  return {};
}

namespace {

resources::Slots base_slots(const ParallelRecord& r) {
  return {{"src", r.pair.src}, {"tgt", r.pair.tgt}, {"source", r.source}};
}

std::string render_step(std::string_view name, resources::Slots slots) {
  return resources::render(resources::get("steps/" + std::string(name) + ".txt"), slots);
}

TraceRecord finish(const ParallelRecord& record, StrategyKind kind, std::vector<StepOutput> steps) {
  TraceRecord t;
  t.record_id = record.id;
  t.strategy = kind;
  t.trace = assemble_trace(kind, record.pair, steps);
  t.attempts = attempts_from_steps(kind, steps);
  t.steps = std::move(steps);
  if (!t.attempts.empty()) t.final_translation = t.attempts.back();
  return t;
}

}  // namespace

TraceRecord run_maps(const ParallelRecord& record, Gateway& gw, const GenerationParams& params,
                     const StrategyOptions& opts) {
  const auto& pair = record.pair;
  std::vector<StepOutput> steps;
  auto ask = [&](std::string name, std::string prompt, StepParse parse, bool required) {
    steps.push_back(run_step(gw, params, std::move(name), Prompt::user(std::move(prompt)), parse, pair, required));
    return steps.back().parsed;
  };
  auto guided = [&](const std::string& aspect, const std::string& knowledge) {
    auto slots = base_slots(record);
    slots["aspect"] = aspect;
    slots["knowledge"] = knowledge;
    return render_step("maps_guided", slots);
  };

  ask("zero_shot", render_step("maps_zero_shot", base_slots(record)), StepParse::translation, true);
  const auto demos = ask("demonstrations", render_step("maps_demos", base_slots(record)), StepParse::verbatim, true);
  ask("demonstrations_draft", guided("Related " + pair.src + "-" + pair.tgt + " sentence pairs", demos),
      StepParse::translation, true);
  const auto keywords = ask("keywords", render_step("maps_keywords", base_slots(record)), StepParse::verbatim, true);
  ask("keywords_draft", guided("Keyword Pairs", keywords), StepParse::translation, true);
  const auto topics = ask("topics", render_step("maps_topics", base_slots(record)), StepParse::verbatim, true);
  ask("topics_draft", guided("Topics", topics), StepParse::translation, true);

  TraceRecord t = finish(record, StrategyKind::maps, std::move(steps));
  std::size_t best = 0;
  if (opts.chooser) {
    best = opts.chooser(record, t.attempts);
    if (best >= t.attempts.size()) throw InvalidArgument("candidate chooser returned an out-of-range index");
  }
  t.final_translation = t.attempts[best];
  return t;
}

TraceRecord run_sbys(const ParallelRecord& record, Gateway& gw, const GenerationParams& params) {
  const auto& pair = record.pair;
  std::vector<StepOutput> steps;

  Prompt chat = Prompt::user(render_step("sbys_research", base_slots(record)));
  steps.push_back(run_step(gw, params, "research", chat, StepParse::verbatim, pair, false));
  chat.messages.push_back({"assistant", steps.back().parsed});
  chat.messages.push_back({"user", render_step("sbys_draft", base_slots(record))});
  steps.push_back(run_step(gw, params, "draft", chat, StepParse::translation, pair, true));
  chat.messages.push_back({"assistant", steps.back().parsed});
  chat.messages.push_back({"user", render_step("sbys_refine", base_slots(record))});
  steps.push_back(run_step(gw, params, "refinement", chat, StepParse::translation, pair, true));

  auto slots = base_slots(record);
  slots["draft"] = steps[1].parsed;
  slots["refinement"] = steps[2].parsed;
  steps.push_back(run_step(gw, params, "proofreading", Prompt::user(render_step("sbys_proofread", slots)),
                           StepParse::translation, pair, true));
  return finish(record, StrategyKind::sbys, std::move(steps));
}

TraceRecord run_tear(const ParallelRecord& record, Gateway& gw, const GenerationParams& params,
                     const std::vector<ParallelRecord>& demos) {
  const auto& pair = record.pair;
  std::vector<StepOutput> steps;
  steps.push_back(run_step(gw, params, "draft", decompose::few_shot_prompt(record.source, pair, demos),
                           StepParse::translation, pair, true));
  auto slots = base_slots(record);
  slots["draft"] = steps[0].parsed;
  steps.push_back(run_step(gw, params, "annotation", Prompt::user(render_step("tear_estimate", slots)),
                           StepParse::verbatim, pair, false));
  slots["annotations"] = steps[1].parsed;
  steps.push_back(run_step(gw, params, "refinement", Prompt::user(render_step("tear_refine", slots)),
                           StepParse::translation, pair, true));
  return finish(record, StrategyKind::tear, std::move(steps));
}

TraceRecord run_self_refine(const ParallelRecord& record, Gateway& gw, const GenerationParams& params, int rounds) {
  if (rounds < 1) throw InvalidArgument("self-refine needs at least one round");
  const auto& pair = record.pair;
  std::vector<StepOutput> steps;
  steps.push_back(run_step(gw, params, "draft", Prompt::user(build_instruct_prompt(record)), StepParse::translation,
                           pair, true));
  for (int r = 1; r <= rounds; ++r) {
    auto slots = base_slots(record);
    slots["translation"] = steps.back().parsed;
    steps.push_back(run_step(gw, params, "refine_" + std::to_string(r),
                             Prompt::user(render_step("selfrefine_refine", slots)), StepParse::translation, pair,
                             true));
  }
  return finish(record, StrategyKind::self_refine, std::move(steps));
}

TraceRecord run_comptra(const ParallelRecord& record, Gateway& gw, const GenerationParams& params,
                        const std::vector<ParallelRecord>& demos, int n_phrases) {
  if (n_phrases < 1) throw InvalidArgument("n_phrases must be >= 1");
  std::vector<StepOutput> steps;
  decompose::DecomposeOptions opts;
  opts.n_phrases = n_phrases;
  auto phrases = decompose::decompose(record, decompose::DecompKind::comptra_phrases, gw, params, opts, &steps);
  if (steps.empty()) steps.push_back(StepOutput{"decompose", "", "", phrases.front()});
  steps.back().parsed = text::join(phrases, "\n");
  decompose::translate_aux(phrases, record, decompose::DecompKind::comptra_phrases, gw, params, demos, &steps);
  TraceRecord t = finish(record, StrategyKind::comptra, std::move(steps));
  t.final_translation.clear();
  return t;
}

TraceRecord run_strategy(StrategyKind kind, const ParallelRecord& record, Gateway& gw,
                         const GenerationParams& params, const StrategyOptions& opts) {
  switch (kind) {
    case StrategyKind::maps: return run_maps(record, gw, params, opts);
    case StrategyKind::sbys: return run_sbys(record, gw, params);
    case StrategyKind::tear: return run_tear(record, gw, params, opts.demos);
    case StrategyKind::self_refine: return run_self_refine(record, gw, params, opts.self_refine_rounds);
    case StrategyKind::comptra: return run_comptra(record, gw, params, opts.demos, opts.comptra_phrases);
  }
  throw InvalidArgument("unknown strategy");
}

}  // namespace thinkmt::strategies
