#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "thinkmt/core/error.hpp"
#include "thinkmt/core/types.hpp"
#include "thinkmt/net/retry.hpp"

namespace thinkmt::gateway {

inline constexpr std::string_view kNothinkPrefix = "<think>\n\n</think>";

enum class ThinkingMode { on, off, not_applicable };

std::string_view to_string(ThinkingMode m);
ThinkingMode thinking_mode_from_string(std::string_view s);

struct GenerationParams {
  double temperature = 0.0;
  int max_new_tokens = 512;
  int max_thinking_tokens = 3500;
  ThinkingMode thinking = ThinkingMode::not_applicable;
  std::vector<std::string> stop_sequences;
  std::optional<std::int64_t> seed;

  void validate() const;
  Json to_json() const;
  static GenerationParams from_json(const Json& j);
};

struct ChatMessage {
  std::string role;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

/// A chat conversation, or a raw text prompt when `messages` is empty
/// (completion-style endpoints for base and fine-tuned models).
struct Prompt {
  std::vector<ChatMessage> messages;
  std::string text;

  static Prompt user(std::string content) { return Prompt{{{"user", std::move(content)}}, {}}; }
  static Prompt raw(std::string text) { return Prompt{{}, std::move(text)}; }

  bool is_chat() const { return !messages.empty(); }
  bool operator==(const Prompt&) const = default;
};

Json to_json(const Prompt& p);

/// Where the thinking-suppression literal goes.
enum class NothinkPlacement {
  /// Pre-filled assistant turn the model continues from.
  assistant_prefix,
  /// Appended to the last user message (or raw prompt text).
  raw_append,
};

/// Primes the response region with `<think>\n\n</think>` so a thinking model
/// skips its reasoning phase. Throws InvalidArgument when the prompt is
/// already primed.
Prompt apply_nothink(const Prompt& prompt, NothinkPlacement placement = NothinkPlacement::assistant_prefix);

bool has_nothink(const Prompt& prompt);

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct GenerationResult {
  std::string raw;
  std::optional<std::string> thinking_part;
  std::string answer;
  /// Thinking was requested but `</think>` never arrived; answer is empty.
  bool truncated_thinking = false;
  Usage usage;
  bool cache_hit = false;
};

/// What a backend returns for one call.
struct BackendReply {
  std::string text;
  Usage usage;
  bool hit_length_limit = false;
};

/// Retryable failure (timeouts, HTTP 429/5xx, refused connections).
class TransientError : public Error {
public:
  using Error::Error;
};

/// Non-retryable backend failure (bad request, authentication, ...).
class BackendError : public Error {
public:
  using Error::Error;
};

/// The backend kept failing after every retry.
class BackendUnavailable : public Error {
public:
  using Error::Error;
};

struct BackendRequest {
  Prompt prompt;
  GenerationParams params;
  /// Total completion budget sent to the server.
  int max_tokens = 0;
};

/// A text-generation service. Implementations must be safe to call from
/// several threads at once.
class Backend {
public:
  virtual ~Backend() = default;
  /// Stable identity used in cache keys (e.g. endpoint + model name).
  virtual std::string id() const = 0;
  virtual BackendReply complete(const BackendRequest& request) = 0;
};

using RetryPolicy = net::RetryPolicy;

struct GatewayOptions {
  RetryPolicy retry;
  int max_in_flight = 8;
  bool cache_enabled = true;
  /// Content-addressed response files; in-memory only when unset.
  std::optional<std::filesystem::path> cache_dir;
  NothinkPlacement nothink_placement = NothinkPlacement::assistant_prefix;
};

/// Content-addressed response cache, in memory and optionally on disk.
class ResponseCache {
public:
  explicit ResponseCache(std::optional<std::filesystem::path> dir = std::nullopt) : dir_(std::move(dir)) {}

  std::optional<BackendReply> get(const std::string& key);
  void put(const std::string& key, const BackendReply& reply);

private:
  std::filesystem::path file_for(const std::string& key) const;

  std::optional<std::filesystem::path> dir_;
  std::mutex mu_;
  std::unordered_map<std::string, BackendReply> memory_;
};

/// Uniform, thread-safe access to a generation backend: thinking-mode
/// control, bounded concurrency, retries with jittered exponential backoff
/// and response caching.
class Gateway {
public:
  Gateway(std::shared_ptr<Backend> backend, GatewayOptions options = {});

  /// Generates one completion. With thinking off the prompt is primed with
  /// the suppression literal; with thinking on the reply is split at the
  /// first `</think>`. Throws BackendUnavailable after retries and
  /// BackendError on non-retryable failures.
  GenerationResult generate(const Prompt& prompt, const GenerationParams& params);

  /// Runs requests concurrently (bounded by max_in_flight) and returns the
  /// results in input order. The first failure (by index) is rethrown once
  /// every request has finished.
  std::vector<GenerationResult> generate_all(std::span<const Prompt> prompts, const GenerationParams& params);

  /// The exact prompt sent to the backend for (prompt, params).
  Prompt effective_prompt(const Prompt& prompt, const GenerationParams& params) const;

  /// Cache key: a function of the prompt bytes, params and backend id only.
  std::string cache_key(const Prompt& effective, const GenerationParams& params) const;

  const std::string& backend_id() const { return backend_id_; }
  const GatewayOptions& options() const { return options_; }
  std::uint64_t backend_calls() const { return backend_calls_.load(); }
  std::uint64_t cache_hits() const { return cache_hits_.load(); }

private:
  BackendReply call_with_retries(const BackendRequest& request);

  std::shared_ptr<Backend> backend_;
  std::string backend_id_;
  GatewayOptions options_;
  ResponseCache cache_;
  std::counting_semaphore<1 << 16> slots_;
  std::atomic<std::uint64_t> backend_calls_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
};

/// Splits a raw reply into thinking part and answer according to the mode.
/// With thinking on, a reply without `</think>` is truncated when it opened
/// a think block or hit the length limit; a reply with no think tags at all
/// is taken as a plain answer.
GenerationResult split_reply(std::string raw, ThinkingMode mode, bool hit_length_limit = false);

enum class ModelKind { thinking, instruct, finetuned_cot, finetuned_io };

std::string_view to_string(ModelKind k);
ModelKind model_kind_from_string(std::string_view s);

struct Extraction {
  std::string text;
  /// Extraction produced nothing; metrics score the segment as empty.
  bool empty_hypothesis = false;
};

/// The final translation inside a generation, per model kind.
Extraction extract_final_translation(const GenerationResult& result, ModelKind kind);

/// Runs `fn(i)` for i in [0, n) on up to `workers` threads. Exceptions are
/// rethrown (the first one by index) after every task has finished.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace thinkmt::gateway
