#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "thinkmt/core/error.hpp"
#include "thinkmt/core/types.hpp"
#include "thinkmt/gateway/gateway.hpp"

namespace thinkmt::distill {

enum class CotTemplateId { T1, T2, T3, T4, T5, T6 };

struct CotTemplate {
  CotTemplateId id;
  std::string_view name;
  /// The numbered guide, including its `<think>` tags.
  std::string_view body;
};

std::span<const CotTemplate> all_templates();
const CotTemplate& cot_template(CotTemplateId id);
std::string_view to_string(CotTemplateId id);
CotTemplateId template_id_from_string(std::string_view s);

/// The teacher prompt asking for a first-person account of how `record`'s
/// source becomes its target, guided by `tmpl`.
std::string build_elicitation_prompt(const ParallelRecord& record, const CotTemplate& tmpl);

class MissingThinkTags : public Error {
public:
  using Error::Error;
};

/// Text between the first `<think>` and the last `</think>`, trimmed, with
/// any nested tags removed. nullopt when either tag is missing or the
/// content is empty.
std::optional<std::string> extract_think_block(std::string_view reply);

/// Elicits a trace for one record. One reprompt with a format reminder when
/// the reply lacks the tags, then MissingThinkTags.
std::string distill_trace(const ParallelRecord& record, const CotTemplate& tmpl, gateway::Gateway& gw,
                          const gateway::GenerationParams& params);

struct DistilledTrace {
  std::string record_id;
  CotTemplateId template_id = CotTemplateId::T1;
  std::string trace;
};

Json to_json(const DistilledTrace& t);
DistilledTrace distilled_trace_from_json(const Json& j);

struct DistillReport {
  /// In dataset order; failed records are absent.
  std::vector<DistilledTrace> traces;
  std::vector<std::string> failed_ids;
};

/// Distills every record concurrently; output order follows the dataset.
/// Records that fail are dropped; BackendUnavailable aborts the run.
DistillReport distill_dataset(const std::vector<ParallelRecord>& records, const CotTemplate& tmpl,
                              gateway::Gateway& gw, const gateway::GenerationParams& params, int workers = 8);

}  // namespace thinkmt::distill
