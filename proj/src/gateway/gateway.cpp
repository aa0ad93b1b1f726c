#include "thinkmt/gateway/gateway.hpp"

#include <cmath>
#include <exception>
#include <fstream>
#include <thread>

#include "thinkmt/core/hash.hpp"
#include "thinkmt/core/jsonl.hpp"
#include "thinkmt/core/prompts.hpp"
#include "thinkmt/core/text.hpp"

namespace thinkmt::gateway {

std::string_view to_string(ThinkingMode m) {
  switch (m) {
    case ThinkingMode::on: return "on";
    case ThinkingMode::off: return "off";
    case ThinkingMode::not_applicable: return "n/a";
  }
  return "n/a";
}

ThinkingMode thinking_mode_from_string(std::string_view s) {
  if (s == "on") return ThinkingMode::on;
  if (s == "off") return ThinkingMode::off;
  if (s == "n/a" || s == "na") return ThinkingMode::not_applicable;
  throw InvalidArgument("unknown thinking mode: " + std::string(s));
}

void GenerationParams::validate() const {
  if (!(temperature >= 0.0) || !std::isfinite(temperature))
    throw InvalidArgument("temperature must be a finite value >= 0");
  if (max_new_tokens <= 0) throw InvalidArgument("max_new_tokens must be positive");
  if (max_thinking_tokens <= 0) throw InvalidArgument("max_thinking_tokens must be positive");
}

Json GenerationParams::to_json() const {
  Json j;
  j["temperature"] = temperature;
  j["max_new_tokens"] = max_new_tokens;
  j["max_thinking_tokens"] = max_thinking_tokens;
  j["thinking"] = std::string(to_string(thinking));
  j["stop_sequences"] = stop_sequences;
  j["seed"] = seed ? Json(*seed) : Json(nullptr);
  return j;
}

GenerationParams GenerationParams::from_json(const Json& j) {
  GenerationParams p;
  p.temperature = j.value("temperature", p.temperature);
  p.max_new_tokens = j.value("max_new_tokens", p.max_new_tokens);
  p.max_thinking_tokens = j.value("max_thinking_tokens", p.max_thinking_tokens);
  if (j.contains("thinking")) p.thinking = thinking_mode_from_string(j.at("thinking").get<std::string>());
  if (j.contains("stop_sequences")) p.stop_sequences = j.at("stop_sequences").get<std::vector<std::string>>();
  if (j.contains("seed") && !j.at("seed").is_null()) p.seed = j.at("seed").get<std::int64_t>();
  p.validate();
  return p;
}

Json to_json(const Prompt& p) {
  Json j;
  if (p.is_chat()) {
    Json msgs = Json::array();
    for (const auto& m : p.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    j["messages"] = std::move(msgs);
  } else {
    j["text"] = p.text;
  }
  return j;
}

bool has_nothink(const Prompt& prompt) {
  if (!prompt.is_chat()) return text::ends_with(prompt.text, kNothinkPrefix);
  const auto& last = prompt.messages.back();
  return text::ends_with(last.content, kNothinkPrefix);
}

Prompt apply_nothink(const Prompt& prompt, NothinkPlacement placement) {
  if (has_nothink(prompt)) throw InvalidArgument("prompt is already primed with the thinking-suppression prefix");
  Prompt out = prompt;
  if (!out.is_chat()) {
    out.text += kNothinkPrefix;
    return out;
  }
  if (out.messages.back().role == "assistant")
    throw InvalidArgument("prompt already ends with an assistant turn");
  if (placement == NothinkPlacement::assistant_prefix) {
    out.messages.push_back({"assistant", std::string(kNothinkPrefix)});
  } else {
    out.messages.back().content += kNothinkPrefix;
  }
  return out;
}

GenerationResult split_reply(std::string raw, ThinkingMode mode, bool hit_length_limit) {
  GenerationResult r;
  r.raw = std::move(raw);
  const std::string_view v = r.raw;
  if (mode != ThinkingMode::on) {
    r.answer = std::string(text::trim(v));
    return r;
  }
  const auto close = v.find(kThinkClose);
  if (close == std::string_view::npos) {
    auto open = v.find(kThinkOpen);
    if (open == std::string_view::npos && !hit_length_limit) {
      r.answer = std::string(text::trim(v));
      return r;
    }
    auto body = open == std::string_view::npos ? v : v.substr(open + kThinkOpen.size());
    r.thinking_part = std::string(text::trim(body));
    r.truncated_thinking = true;
    return r;
  }
  auto head = v.substr(0, close);
  auto open = head.rfind(kThinkOpen);
  if (open != std::string_view::npos) head = head.substr(open + kThinkOpen.size());
  r.thinking_part = std::string(text::trim(head));
  r.answer = std::string(text::trim(v.substr(close + kThinkClose.size())));
  return r;
}

// ---------------------------------------------------------------------------
// Cache

namespace {

Json reply_to_json(const BackendReply& r) {
  return Json{{"text", r.text},
              {"prompt_tokens", r.usage.prompt_tokens},
              {"completion_tokens", r.usage.completion_tokens},
              {"hit_length_limit", r.hit_length_limit}};
}

BackendReply reply_from_json(const Json& j) {
  BackendReply r;
  r.text = j.at("text").get<std::string>();
  r.usage.prompt_tokens = j.value("prompt_tokens", 0);
  r.usage.completion_tokens = j.value("completion_tokens", 0);
  r.hit_length_limit = j.value("hit_length_limit", false);
  return r;
}

}  // namespace

std::filesystem::path ResponseCache::file_for(const std::string& key) const {
  return *dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<BackendReply> ResponseCache::get(const std::string& key) {
  {
    std::lock_guard lock(mu_);
    if (auto it = memory_.find(key); it != memory_.end()) return it->second;
  }
  if (!dir_) return std::nullopt;
  const auto path = file_for(key);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  BackendReply reply;
  try {
    reply = reply_from_json(Json::parse(read_file(path)));
  } catch (const std::exception&) {
    return std::nullopt;  // a torn or foreign file is a miss
  }
  std::lock_guard lock(mu_);
  memory_.emplace(key, reply);
  return reply;
}

void ResponseCache::put(const std::string& key, const BackendReply& reply) {
  {
    std::lock_guard lock(mu_);
    memory_.insert_or_assign(key, reply);
  }
  if (!dir_) return;
  const auto path = file_for(key);
  std::filesystem::create_directories(path.parent_path());
  write_file_atomic(path, reply_to_json(reply).dump());
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayOptions options)
    : backend_(std::move(backend)),
      options_(std::move(options)),
      cache_(options_.cache_dir),
      slots_(options_.max_in_flight) {
  if (!backend_) throw InvalidArgument("gateway needs a backend");
  if (options_.max_in_flight < 1) throw InvalidArgument("max_in_flight must be >= 1");
  if (options_.retry.max_retries < 0) throw InvalidArgument("max_retries must be >= 0");
  backend_id_ = backend_->id();
}

Prompt Gateway::effective_prompt(const Prompt& prompt, const GenerationParams& params) const {
  if (params.thinking == ThinkingMode::off) return apply_nothink(prompt, options_.nothink_placement);
  return prompt;
}

std::string Gateway::cache_key(const Prompt& effective, const GenerationParams& params) const {
  Json j;
  j["backend"] = backend_id_;
  j["prompt"] = to_json(effective);
  j["params"] = params.to_json();
  return sha256_hex(j.dump());
}

BackendReply Gateway::call_with_retries(const BackendRequest& request) {
  return net::with_retries<TransientError>(
      options_.retry,
      [&] {
        slots_.acquire();
        struct Release {
          std::counting_semaphore<1 << 16>& s;
          ~Release() { s.release(); }
        } release{slots_};
        backend_calls_.fetch_add(1);
        return backend_->complete(request);
      },
      [&](const std::string& last) {
        throw BackendUnavailable("backend " + backend_id_ + " unavailable after " +
                                 std::to_string(options_.retry.max_retries + 1) + " attempts: " + last);
      });
}

GenerationResult Gateway::generate(const Prompt& prompt, const GenerationParams& params) {
  params.validate();
  if (!prompt.is_chat() && prompt.text.empty()) throw InvalidArgument("empty prompt");
  BackendRequest request;
  request.prompt = effective_prompt(prompt, params);
  request.params = params;
  request.max_tokens = params.max_new_tokens +
                       (params.thinking == ThinkingMode::on ? params.max_thinking_tokens : 0);

  std::string key;
  std::optional<BackendReply> reply;
  if (options_.cache_enabled) {
    key = cache_key(request.prompt, params);
    reply = cache_.get(key);
  }
  const bool hit = reply.has_value();
  if (hit) {
    cache_hits_.fetch_add(1);
  } else {
    reply = call_with_retries(request);
    if (options_.cache_enabled) cache_.put(key, *reply);
  }
  GenerationResult result = split_reply(std::move(reply->text), params.thinking, reply->hit_length_limit);
  result.usage = reply->usage;
  result.cache_hit = hit;
  return result;
}

std::vector<GenerationResult> Gateway::generate_all(std::span<const Prompt> prompts, const GenerationParams& params) {
  std::vector<GenerationResult> out(prompts.size());
  parallel_for(prompts.size(), options_.max_in_flight,
               [&](std::size_t i) { out[i] = generate(prompts[i], params); });
  return out;
}

// ---------------------------------------------------------------------------
// Extraction

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::thinking: return "thinking";
    case ModelKind::instruct: return "instruct";
    case ModelKind::finetuned_cot: return "finetuned-cot";
    case ModelKind::finetuned_io: return "finetuned-io";
  }
  return "instruct";
}

ModelKind model_kind_from_string(std::string_view s) {
  if (s == "thinking") return ModelKind::thinking;
  if (s == "instruct") return ModelKind::instruct;
  if (s == "finetuned-cot") return ModelKind::finetuned_cot;
  if (s == "finetuned-io") return ModelKind::finetuned_io;
  throw InvalidArgument("unknown model kind: " + std::string(s));
}

Extraction extract_final_translation(const GenerationResult& result, ModelKind kind) {
  std::string out;
  if (result.truncated_thinking) return {"", true};
  switch (kind) {
    case ModelKind::thinking:
      out = std::string(text::trim(result.answer));
      break;
    case ModelKind::instruct:
      out = std::string(text::trim(text::strip_wrapping_quotes(text::trim(result.answer))));
      break;
    case ModelKind::finetuned_cot: {
      if (auto parts = parse_cot_target(result.raw)) {
        out = parts->target;
      } else {
        for (auto line : text::split_lines(result.raw)) {
          if (!text::trim(line).empty()) out = std::string(text::trim(line));
        }
      }
      break;
    }
    case ModelKind::finetuned_io: {
      auto body = text::trim(result.raw);
      out = std::string(text::trim(body.substr(0, body.find('\n'))));
      break;
    }
  }
  const bool empty = out.empty();
  return {std::move(out), empty};
}

// ---------------------------------------------------------------------------

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t count = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (count == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(count);
    for (std::size_t t = 0; t < count; ++t) threads.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace thinkmt::gateway
