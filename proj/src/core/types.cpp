#include "thinkmt/core/types.hpp"

#include <unordered_set>

#include "thinkmt/core/error.hpp"
#include "thinkmt/core/prompts.hpp"
#include "thinkmt/core/text.hpp"

namespace thinkmt {

void LangPair::validate() const {
  if (text::trim(src).empty() || text::trim(tgt).empty()) {
    throw InvalidArgument("language pair: language names must be non-empty");
  }
  if (src == tgt) throw InvalidArgument("language pair: source and target language are both '" + src + "'");
}

void ParallelRecord::validate() const {
  if (id.empty()) throw InvalidArgument("parallel record: empty id");
  if (text::trim(source).empty()) throw InvalidArgument("parallel record " + id + ": empty source");
  if (text::trim(target).empty()) throw InvalidArgument("parallel record " + id + ": empty target");
  pair.validate();
}

std::string_view to_string(TrainingMode mode) { return mode == TrainingMode::io ? "io" : "cot"; }

TrainingMode training_mode_from_string(std::string_view s) {
  if (s == "io") return TrainingMode::io;
  if (s == "cot") return TrainingMode::cot;
  throw InvalidArgument("unknown training mode '" + std::string(s) + "'");
}

namespace {

std::size_t count(std::string_view s, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string_view::npos; pos = s.find(needle, pos + needle.size())) ++n;
  return n;
}

}  // namespace

void TrainingExample::validate() const {
  if (id.empty()) throw InvalidArgument("training example: empty id");
  if (mode == TrainingMode::io) {
    if (completion.find(kThinkOpen) != std::string::npos || completion.find(kThinkClose) != std::string::npos) {
      throw InvalidArgument("training example " + id + ": io completion contains a think marker");
    }
    return;
  }
  const auto open = completion.find(kThinkOpen);
  const auto close = completion.find(kThinkClose);
  const auto marker = completion.find(kFinalTranslationMarker, close == std::string::npos ? 0 : close);
  if (count(completion, kThinkOpen) != 1 || count(completion, kThinkClose) != 1 || open > close ||
      marker == std::string::npos || !parse_cot_target(completion)) {
    throw InvalidArgument("training example " + id + ": cot completion does not follow the thinking-target grammar");
  }
}

template <typename Record>
void Dataset<Record>::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    r.validate();
    if (!seen.insert(r.id).second) throw InvalidArgument("dataset: duplicate id '" + r.id + "'");
  }
}

template struct Dataset<ParallelRecord>;
template struct Dataset<TrainingExample>;

Json to_json(const ParallelRecord& r) {
  Json j;
  j["id"] = r.id;
  j["source"] = r.source;
  j["target"] = r.target;
  j["src_lang"] = r.pair.src;
  j["tgt_lang"] = r.pair.tgt;
  j["src_code"] = r.pair.src_code;
  j["tgt_code"] = r.pair.tgt_code;
  return j;
}

Json to_json(const TrainingExample& r) {
  Json j;
  j["id"] = r.id;
  j["prompt"] = r.prompt;
  j["completion"] = r.completion;
  j["mode"] = to_string(r.mode);
  Json meta = Json::object();
  for (const auto& [k, v] : r.meta) meta[k] = v;
  j["meta"] = std::move(meta);
  return j;
}

namespace {

std::string get_string(const Json& j, const char* key, bool required = true) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    if (required) throw ParseError(std::string("missing field '") + key + "'");
    return {};
  }
  if (!it->is_string()) throw ParseError(std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

}  // namespace

ParallelRecord parallel_record_from_json(const Json& j) {
  ParallelRecord r;
  r.id = get_string(j, "id");
  r.source = get_string(j, "source");
  r.target = get_string(j, "target");
  r.pair.src = get_string(j, "src_lang");
  r.pair.tgt = get_string(j, "tgt_lang");
  r.pair.src_code = get_string(j, "src_code", false);
  r.pair.tgt_code = get_string(j, "tgt_code", false);
  return r;
}

TrainingExample training_example_from_json(const Json& j) {
  TrainingExample r;
  r.id = get_string(j, "id");
  r.prompt = get_string(j, "prompt");
  r.completion = get_string(j, "completion");
  r.mode = training_mode_from_string(get_string(j, "mode"));
  if (const auto it = j.find("meta"); it != j.end()) {
    if (!it->is_object()) throw ParseError("field 'meta' is not an object");
    for (const auto& [k, v] : it->items()) {
      r.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  return r;
}

}  // namespace thinkmt
