#include "thinkmt/decompose/decompose.hpp"

#include <spdlog/spdlog.h>

#include <regex>

#include "thinkmt/core/prompts.hpp"
#include "thinkmt/core/resources.hpp"
#include "thinkmt/core/text.hpp"

namespace thinkmt::decompose {

using strategies::StepOutput;

std::string_view to_string(DecompKind k) {
  switch (k) {
    case DecompKind::paraphrases: return "P";
    case DecompKind::syntactic: return "SP";
    case DecompKind::hard: return "H";
    case DecompKind::comptra_phrases: return "CompTraPhrases";
  }
  return "P";
}

DecompKind decomp_kind_from_string(std::string_view s) {
  const auto k = text::to_lower_ascii(s);
  if (k == "p") return DecompKind::paraphrases;
  if (k == "sp") return DecompKind::syntactic;
  if (k == "h") return DecompKind::hard;
  if (k == "comptraphrases" || k == "comptra") return DecompKind::comptra_phrases;
  throw InvalidArgument("unknown decomposition kind: " + std::string(s));
}

Json to_json(const AuxPair& p) {
  return Json{{"parent_id", p.parent_id}, {"origin", std::string(to_string(p.origin))}, {"text", p.text},
              {"translation", p.translation}};
}

AuxPair aux_pair_from_json(const Json& j) {
  AuxPair p{j.at("text").get<std::string>(), j.at("translation").get<std::string>(),
            decomp_kind_from_string(j.at("origin").get<std::string>()), j.at("parent_id").get<std::string>()};
  if (text::trim(p.text).empty() || text::trim(p.translation).empty())
    throw InvalidArgument("aux pair of " + p.parent_id + " has an empty side");
  return p;
}

std::vector<std::string> parse_numbered_list(std::string_view reply) {
  static const std::regex numbered(R"(^\(?\d{1,3}[.)]\s*(.*)$)");
  static const std::regex bullet(R"(^(?:[-*]|\xE2\x80\xA2)\s+(.*)$)");
  std::vector<std::string> items;
  for (auto raw_line : text::split_lines(reply)) {
    const std::string line(text::trim(raw_line));
    std::smatch m;
    if (!std::regex_match(line, m, numbered) && !std::regex_match(line, m, bullet)) continue;
    std::string item(text::trim(m[1].str()));
    while (text::starts_with(item, "**") && text::ends_with(item, "**") && item.size() >= 4)
      item = item.substr(2, item.size() - 4);
    item = std::string(text::trim(text::strip_wrapping_quotes(text::trim(item))));
    if (!item.empty()) items.push_back(std::move(item));
  }
  return items;
}

namespace {

std::string_view prompt_resource(DecompKind kind) {
  switch (kind) {
    case DecompKind::paraphrases: return "steps/decompose_paraphrases.txt";
    case DecompKind::syntactic: return "steps/decompose_syntactic.txt";
    case DecompKind::hard: return "steps/decompose_hard.txt";
    case DecompKind::comptra_phrases: return "steps/comptra_decompose.txt";
  }
  return "";
}

int wanted_count(DecompKind kind, const DecomposeOptions& opts) {
  switch (kind) {
    case DecompKind::paraphrases:
    case DecompKind::syntactic: return opts.paraphrase_count;
    case DecompKind::hard: return opts.hard_cap;
    case DecompKind::comptra_phrases: return opts.n_phrases;
  }
  return 1;
}

bool is_exact(DecompKind kind) { return kind == DecompKind::paraphrases || kind == DecompKind::syntactic; }

}  // namespace

std::vector<std::string> decompose(const ParallelRecord& record, DecompKind kind, gateway::Gateway& gw,
                                   const gateway::GenerationParams& params, const DecomposeOptions& opts,
                                   std::vector<StepOutput>* steps) {
  const int count = wanted_count(kind, opts);
  if (count < 1) throw InvalidArgument("decomposition count must be >= 1");
  const std::string source(text::trim(record.source));
  if (source.empty()) throw InvalidArgument("cannot decompose an empty source (record " + record.id + ")");
  if (kind == DecompKind::comptra_phrases && text::split_whitespace(source).size() <= 1) return {source};

  const std::string prompt = resources::render(
      resources::get(prompt_resource(kind)),
      {{"src", record.pair.src}, {"tgt", record.pair.tgt}, {"source", source}, {"count", std::to_string(count)}});

  const std::size_t needed = is_exact(kind) ? static_cast<std::size_t>(count) : 1;
  gateway::Prompt conversation = gateway::Prompt::user(prompt);
  std::vector<std::string> items;
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto step = strategies::run_step(gw, params, attempt == 0 ? "decompose" : "decompose_retry", conversation,
                                     strategies::StepParse::verbatim, record.pair, false);
    const std::string reply = step.parsed;
    items = parse_numbered_list(reply);
    if (kind == DecompKind::hard || kind == DecompKind::comptra_phrases) {
      std::erase_if(items, [&](const std::string& s) { return s.size() > source.size(); });
    }
    step.parsed = text::join(items, "\n");
    if (steps) steps->push_back(std::move(step));
    if (items.size() >= needed) break;
    conversation.messages.push_back({"assistant", reply});
    conversation.messages.push_back({"user", std::string(resources::get("steps/list_reminder.txt"))});
  }
  if (items.size() < needed) {
    throw ListParseError("record " + record.id + ": expected " + std::to_string(needed) + " list item(s) for " +
                         std::string(to_string(kind)) + ", got " + std::to_string(items.size()));
  }
  if (items.size() > static_cast<std::size_t>(count)) {
    spdlog::warn("record {}: {} reply has {} items, keeping the first {}", record.id, to_string(kind), items.size(),
                 count);
    items.resize(static_cast<std::size_t>(count));
  }
  return items;
}

gateway::Prompt few_shot_prompt(std::string_view segment, const LangPair& pair,
                                const std::vector<ParallelRecord>& demos) {
  std::string body;
  for (const auto& d : demos) {
    body += build_io_demo(ParallelRecord{d.id, d.source, d.target, pair});
    body += "\n\n";
  }
  body += build_io_prompt(ParallelRecord{"", std::string(segment), "", pair});
  return gateway::Prompt::user(std::move(body));
}

std::vector<AuxPair> translate_aux(const std::vector<std::string>& segments, const ParallelRecord& record,
                                   DecompKind origin, gateway::Gateway& gw, const gateway::GenerationParams& params,
                                   const std::vector<ParallelRecord>& demos, std::vector<StepOutput>* steps) {
  std::vector<AuxPair> out;
  std::size_t index = 0;
  for (const auto& raw : segments) {
    const std::string segment(text::trim(raw));
    if (segment.empty()) continue;
    ++index;
    try {
      auto step = strategies::run_step(gw, params, "translate_" + std::to_string(index),
                                       few_shot_prompt(segment, record.pair, demos),
                                       strategies::StepParse::translation, record.pair, true);
      out.push_back(AuxPair{segment, step.parsed, origin, record.id});
      if (steps) steps->push_back(std::move(step));
    } catch (const strategies::StepFailed& e) {
      spdlog::warn("record {}: dropping segment {}: {}", record.id, index, e.what());
    }
  }
  return out;
}

std::string pairs_to_trace(const std::vector<AuxPair>& pairs, const LangPair& pair) {
  std::string out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (i) out += "\n\n";
    out += std::to_string(i + 1) + ". " + pair.src + " Sentence\n" + pairs[i].text + "\n" + pair.tgt +
           " Translation\n" + pairs[i].translation;
  }
  return out;
}

std::optional<std::vector<AuxPair>> trace_to_pairs(std::string_view trace, const LangPair& pair) {
  const auto lines = text::split_lines(trace);
  const std::string src_suffix = ". " + pair.src + " Sentence";
  const std::string tgt_header = pair.tgt + " Translation";
  auto header_number = [&](std::string_view line) -> std::size_t {
    if (!text::ends_with(line, src_suffix)) return 0;
    const auto digits = line.substr(0, line.size() - src_suffix.size());
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string_view::npos) return 0;
    return std::stoul(std::string(digits));
  };

  std::vector<AuxPair> out;
  std::size_t i = 0;
  while (i < lines.size()) {
    if (header_number(lines[i]) != out.size() + 1) return std::nullopt;
    std::size_t j = i + 1;
    std::vector<std::string> text_lines;
    while (j < lines.size() && lines[j] != tgt_header) text_lines.emplace_back(lines[j++]);
    if (j == lines.size()) return std::nullopt;
    std::size_t k = j + 1;
    std::vector<std::string> tr_lines;
    while (k < lines.size() && !(lines[k].empty() && k + 1 < lines.size() && header_number(lines[k + 1]) == out.size() + 2))
      tr_lines.emplace_back(lines[k++]);
    AuxPair p;
    p.text = text::join(text_lines, "\n");
    p.translation = text::join(tr_lines, "\n");
    out.push_back(std::move(p));
    i = k + 1;
  }
  if (out.empty()) return std::nullopt;
  return out;
}

}  // namespace thinkmt::decompose
