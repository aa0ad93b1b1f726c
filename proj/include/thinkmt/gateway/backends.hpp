#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "thinkmt/gateway/gateway.hpp"
#include "thinkmt/net/http.hpp"

namespace thinkmt::gateway {

struct OpenAIConfig {
  std::string base_url = "http://localhost:8000/v1";
  std::string model;
  /// Environment variable holding the bearer token; unset or empty means no
  /// Authorization header.
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_seconds = 600;
  /// Merged into every request body (e.g. server-specific sampling knobs).
  Json extra_body = Json::object();

  static OpenAIConfig from_json(const Json& j);
};

/// Any OpenAI-compatible server. Chat prompts go to /chat/completions, raw
/// text prompts to /completions. A trailing assistant message is sent as a
/// prefix to continue (vLLM `continue_final_message`).
class OpenAICompatibleBackend : public Backend {
public:
  explicit OpenAICompatibleBackend(OpenAIConfig cfg);

  std::string id() const override;
  BackendReply complete(const BackendRequest& request) override;

  /// Request body for a request, exposed for tests.
  Json request_body(const BackendRequest& request) const;
  /// Parses a response body; reasoning returned in a separate field is put
  /// back inside `<think>` tags.
  static BackendReply parse_response(const Json& body, bool chat);

private:
  OpenAIConfig cfg_;
  net::HttpClient http_;
};

/// Deterministic test double. Replies are chosen from, in order: the queue
/// of scripted replies, the first rule whose needle occurs in the prompt,
/// then the fallback.
class ScriptedBackend : public Backend {
public:
  using Fallback = std::function<std::string(const BackendRequest&)>;

  struct Rule {
    std::string contains;
    std::string reply;
  };

  explicit ScriptedBackend(std::string name = "scripted");

  ScriptedBackend& on(std::string contains, std::string reply);
  ScriptedBackend& then(std::string reply);
  ScriptedBackend& otherwise(Fallback fallback);
  /// The next `n` calls throw TransientError.
  ScriptedBackend& fail_next(int n);
  /// Every call reports hitting the token limit.
  ScriptedBackend& report_length_limit(bool yes);

  std::string id() const override { return "mock:" + name_; }
  BackendReply complete(const BackendRequest& request) override;

  std::vector<BackendRequest> requests() const;
  std::size_t call_count() const;

private:
  std::string name_;
  mutable std::mutex mu_;
  std::vector<Rule> rules_;
  std::vector<std::string> queue_;
  std::size_t queue_pos_ = 0;
  Fallback fallback_;
  int failures_left_ = 0;
  bool length_limit_ = false;
  std::vector<BackendRequest> log_;
};

/// Flattens a prompt to plain text (messages joined by newlines).
std::string prompt_text(const Prompt& prompt);

/// Text of the last user message, or the raw prompt.
std::string last_user_text(const Prompt& prompt);

/// Backend from a JSON description: `{"kind": "openai", ...}`,
/// `{"kind": "mock", "rules": [...], "default": "synthetic" | "echo" | text}`.
/// Synthetic mocks also take `seed`, `cot_completions` and `oracle` (a
/// parallel JSONL file whose targets answer translation requests).
std::shared_ptr<Backend> make_backend(const Json& cfg);

}  // namespace thinkmt::gateway
