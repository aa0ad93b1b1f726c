#include "thinkmt/gateway/backends.hpp"

#include <cstdlib>

#include "thinkmt/core/hash.hpp"
#include "thinkmt/core/jsonl.hpp"
#include "thinkmt/core/prompts.hpp"
#include "thinkmt/core/text.hpp"
#include "thinkmt/gateway/synthetic.hpp"

namespace thinkmt::gateway {

OpenAIConfig OpenAIConfig::from_json(const Json& j) {
  OpenAIConfig c;
  c.base_url = j.value("base_url", c.base_url);
  c.model = j.value("model", c.model);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
  if (j.contains("extra_body")) c.extra_body = j.at("extra_body");
  if (c.model.empty()) throw InvalidArgument("openai backend needs a model name");
  if (c.timeout_seconds <= 0) throw InvalidArgument("timeout_seconds must be positive");
  return c;
}

OpenAICompatibleBackend::OpenAICompatibleBackend(OpenAIConfig cfg)
    : cfg_(std::move(cfg)), http_(cfg_.base_url, std::chrono::seconds(cfg_.timeout_seconds)) {}

std::string OpenAICompatibleBackend::id() const { return "openai:" + cfg_.base_url + "#" + cfg_.model; }

Json OpenAICompatibleBackend::request_body(const BackendRequest& request) const {
  const auto& p = request.params;
  Json body;
  body["model"] = cfg_.model;
  if (request.prompt.is_chat()) {
    Json msgs = Json::array();
    for (const auto& m : request.prompt.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    body["messages"] = std::move(msgs);
    if (request.prompt.messages.back().role == "assistant") {
      body["continue_final_message"] = true;
      body["add_generation_prompt"] = false;
    }
  } else {
    body["prompt"] = request.prompt.text;
  }
  body["temperature"] = p.temperature;
  body["max_tokens"] = request.max_tokens;
  if (!p.stop_sequences.empty()) body["stop"] = p.stop_sequences;
  if (p.seed) body["seed"] = *p.seed;
  for (const auto& [k, v] : cfg_.extra_body.items()) body[k] = v;
  return body;
}

BackendReply OpenAICompatibleBackend::parse_response(const Json& body, bool chat) {
  if (!body.contains("choices") || body.at("choices").empty())
    throw BackendError("response has no choices");
  const auto& choice = body.at("choices").at(0);
  BackendReply r;
  if (choice.contains("finish_reason") && choice.at("finish_reason").is_string())
    r.hit_length_limit = choice.at("finish_reason").get<std::string>() == "length";
  if (chat) {
    const auto& msg = choice.at("message");
    std::string content = msg.contains("content") && msg.at("content").is_string() ? msg.at("content").get<std::string>() : "";
    std::string reasoning;
    for (const char* key : {"reasoning_content", "reasoning"}) {
      if (msg.contains(key) && msg.at(key).is_string()) {
        reasoning = msg.at(key).get<std::string>();
        break;
      }
    }
    if (!reasoning.empty() && content.find(kThinkClose) == std::string::npos) {
      // Reasoning cut off by the token limit never produced a closing tag.
      const bool cut = r.hit_length_limit && text::trim(content).empty();
      r.text = std::string(kThinkOpen) + "\n" + reasoning;
      if (!cut) r.text += "\n" + std::string(kThinkClose) + "\n" + content;
    } else {
      r.text = std::move(content);
    }
  } else {
    r.text = choice.value("text", "");
  }
  if (body.contains("usage") && body.at("usage").is_object()) {
    r.usage.prompt_tokens = body.at("usage").value("prompt_tokens", 0);
    r.usage.completion_tokens = body.at("usage").value("completion_tokens", 0);
  }
  return r;
}

BackendReply OpenAICompatibleBackend::complete(const BackendRequest& request) {
  const bool chat = request.prompt.is_chat();
  std::map<std::string, std::string> headers;
  if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key)
    headers["Authorization"] = std::string("Bearer ") + key;
  net::HttpResponse res;
  try {
    res = http_.post_json(chat ? "/chat/completions" : "/completions", request_body(request).dump(), headers);
  } catch (const net::ConnectionError& e) {
    throw TransientError(e.what());
  }
  if (net::is_transient_status(res.status))
    throw TransientError("HTTP " + std::to_string(res.status) + " from " + cfg_.base_url);
  if (res.status != 200)
    throw BackendError("HTTP " + std::to_string(res.status) + " from " + cfg_.base_url + ": " + res.body.substr(0, 500));
  Json body;
  try {
    body = Json::parse(res.body);
  } catch (const Json::parse_error& e) {
    throw BackendError(std::string("malformed JSON from backend: ") + e.what());
  }
  return parse_response(body, chat);
}

// ---------------------------------------------------------------------------

std::string prompt_text(const Prompt& prompt) {
  if (!prompt.is_chat()) return prompt.text;
  std::string out;
  for (const auto& m : prompt.messages) {
    if (!out.empty()) out += '\n';
    out += m.content;
  }
  return out;
}

std::string last_user_text(const Prompt& prompt) {
  if (!prompt.is_chat()) return prompt.text;
  for (auto it = prompt.messages.rbegin(); it != prompt.messages.rend(); ++it)
    if (it->role == "user") return it->content;
  return prompt.messages.back().content;
}

ScriptedBackend::ScriptedBackend(std::string name) : name_(std::move(name)) {}

ScriptedBackend& ScriptedBackend::on(std::string contains, std::string reply) {
  std::lock_guard lock(mu_);
  rules_.push_back({std::move(contains), std::move(reply)});
  return *this;
}

ScriptedBackend& ScriptedBackend::then(std::string reply) {
  std::lock_guard lock(mu_);
  queue_.push_back(std::move(reply));
  return *this;
}

ScriptedBackend& ScriptedBackend::otherwise(Fallback fallback) {
  std::lock_guard lock(mu_);
  fallback_ = std::move(fallback);
  return *this;
}

ScriptedBackend& ScriptedBackend::fail_next(int n) {
  std::lock_guard lock(mu_);
  failures_left_ = n;
  return *this;
}

ScriptedBackend& ScriptedBackend::report_length_limit(bool yes) {
  std::lock_guard lock(mu_);
  length_limit_ = yes;
  return *this;
}

BackendReply ScriptedBackend::complete(const BackendRequest& request) {
  Fallback fallback;
  BackendReply reply;
  {
    std::lock_guard lock(mu_);
    log_.push_back(request);
    if (failures_left_ > 0) {
      --failures_left_;
      throw TransientError("scripted transient failure");
    }
    reply.hit_length_limit = length_limit_;
    if (queue_pos_ < queue_.size()) {
      reply.text = queue_[queue_pos_++];
      return reply;
    }
    const std::string text = prompt_text(request.prompt);
    for (const auto& rule : rules_) {
      if (text.find(rule.contains) != std::string::npos) {
        reply.text = rule.reply;
        return reply;
      }
    }
    fallback = fallback_;
  }
  if (!fallback) throw BackendError("scripted backend has no reply for this prompt");
  reply.text = fallback(request);
  return reply;
}

std::vector<BackendRequest> ScriptedBackend::requests() const {
  std::lock_guard lock(mu_);
  return log_;
}

std::size_t ScriptedBackend::call_count() const {
  std::lock_guard lock(mu_);
  return log_.size();
}

std::shared_ptr<Backend> make_backend(const Json& cfg) {
  const std::string kind = cfg.value("kind", "");
  if (kind == "openai") return std::make_shared<OpenAICompatibleBackend>(OpenAIConfig::from_json(cfg));
  if (kind != "mock") throw InvalidArgument("unknown backend kind: '" + kind + "'");

  std::string name = cfg.value("name", "mock");
  name += "#" + sha256_hex(cfg.dump()).substr(0, 12);
  auto backend = std::make_shared<ScriptedBackend>(name);
  if (cfg.contains("rules")) {
    for (const auto& r : cfg.at("rules")) backend->on(r.at("contains").get<std::string>(), r.at("reply").get<std::string>());
  }
  const std::string def = cfg.value("default", "synthetic");
  if (def == "synthetic") {
    SyntheticTeacher::Options opts;
    opts.seed = cfg.value("seed", std::uint64_t{0});
    opts.cot_completions = cfg.value("cot_completions", false);
    if (cfg.contains("oracle")) {
      const std::filesystem::path path = cfg.at("oracle").get<std::string>();
      for (const auto& row : read_jsonl(path)) {
        const auto source = row.at("source").get<std::string>();
        opts.oracle[source] = row.at("target").get<std::string>();
      }
    }
    auto teacher = std::make_shared<SyntheticTeacher>(std::move(opts));
    backend->otherwise([teacher](const BackendRequest& r) { return teacher->reply(r); });
  } else if (def == "echo") {
    backend->otherwise([](const BackendRequest& r) { return last_user_text(r.prompt); });
  } else {
    backend->otherwise([def](const BackendRequest&) { return def; });
  }
  return backend;
}

}  // namespace thinkmt::gateway
