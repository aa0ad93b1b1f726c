#include "thinkmt/distill/distill.hpp"

#include <spdlog/spdlog.h>

#include <array>

#include "thinkmt/core/prompts.hpp"
#include "thinkmt/core/resources.hpp"
#include "thinkmt/core/text.hpp"

namespace thinkmt::distill {

namespace {

const std::array<CotTemplate, 6>& table() {
  static const std::array<CotTemplate, 6> t{{
      {CotTemplateId::T1, "Hierarchical Translation", resources::get("cot/T1.txt")},
      {CotTemplateId::T2, "Triangulating Translation", resources::get("cot/T2.txt")},
      {CotTemplateId::T3, "Back Translation", resources::get("cot/T3.txt")},
      {CotTemplateId::T4, "Context-aware Translation", resources::get("cot/T4.txt")},
      {CotTemplateId::T5, "Translation Explanation", resources::get("cot/T5.txt")},
      {CotTemplateId::T6, "Structural Transformation", resources::get("cot/T6.txt")},
  }};
  return t;
}

}  // namespace

std::span<const CotTemplate> all_templates() { return table(); }

const CotTemplate& cot_template(CotTemplateId id) { return table()[static_cast<std::size_t>(id)]; }

std::string_view to_string(CotTemplateId id) {
  static constexpr std::array<std::string_view, 6> names{"T1", "T2", "T3", "T4", "T5", "T6"};
  return names[static_cast<std::size_t>(id)];
}

CotTemplateId template_id_from_string(std::string_view s) {
  for (const auto& t : table())
    if (text::to_lower_ascii(to_string(t.id)) == text::to_lower_ascii(s)) return t.id;
  throw InvalidArgument("unknown CoT template: " + std::string(s));
}

std::string build_elicitation_prompt(const ParallelRecord& record, const CotTemplate& tmpl) {
  return resources::render(resources::get("cot/elicitation.txt"), {{"src", record.pair.src},
                                                                   {"tgt", record.pair.tgt},
                                                                   {"sentence", record.source},
                                                                   {"translation", record.target},
                                                                   {"chain_of_thought_template", std::string(tmpl.body)}});
}

std::optional<std::string> extract_think_block(std::string_view reply) {
  const auto open = reply.find(kThinkOpen);
  const auto close = reply.rfind(kThinkClose);
  if (open == std::string_view::npos || close == std::string_view::npos || close < open + kThinkOpen.size())
    return std::nullopt;
  std::string inner(reply.substr(open + kThinkOpen.size(), close - open - kThinkOpen.size()));
  inner = text::replace_all(std::move(inner), kThinkOpen, "");
  inner = text::replace_all(std::move(inner), kThinkClose, "");
  std::string out(text::trim(inner));
  if (out.empty()) return std::nullopt;
  return out;
}

std::string distill_trace(const ParallelRecord& record, const CotTemplate& tmpl, gateway::Gateway& gw,
                          const gateway::GenerationParams& params) {
  auto conversation = gateway::Prompt::user(build_elicitation_prompt(record, tmpl));
  for (int attempt = 0; attempt < 2; ++attempt) {
    const auto result = gw.generate(conversation, params);
    const std::string& reply = params.thinking == gateway::ThinkingMode::on ? result.answer : result.raw;
    if (auto trace = extract_think_block(reply)) return *trace;
    conversation.messages.push_back({"assistant", std::string(text::trim(reply))});
    conversation.messages.push_back({"user", std::string(resources::get("steps/think_reminder.txt"))});
  }
  throw MissingThinkTags("record " + record.id + ": teacher reply has no <think></think> block");
}

Json to_json(const DistilledTrace& t) {
  return Json{{"record_id", t.record_id}, {"template", std::string(to_string(t.template_id))}, {"trace", t.trace}};
}

DistilledTrace distilled_trace_from_json(const Json& j) {
  return {j.at("record_id").get<std::string>(), template_id_from_string(j.at("template").get<std::string>()),
          j.at("trace").get<std::string>()};
}

DistillReport distill_dataset(const std::vector<ParallelRecord>& records, const CotTemplate& tmpl,
                              gateway::Gateway& gw, const gateway::GenerationParams& params, int workers) {
  std::vector<std::optional<std::string>> traces(records.size());
  gateway::parallel_for(records.size(), workers, [&](std::size_t i) {
    try {
      traces[i] = distill_trace(records[i], tmpl, gw, params);
    } catch (const gateway::BackendUnavailable&) {
      throw;
    } catch (const Error& e) {
      spdlog::warn("distillation dropped record {}: {}", records[i].id, e.what());
    }
  });
  DistillReport report;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (traces[i]) {
      report.traces.push_back({records[i].id, tmpl.id, std::move(*traces[i])});
    } else {
      report.failed_ids.push_back(records[i].id);
    }
  }
  return report;
}

}  // namespace thinkmt::distill
