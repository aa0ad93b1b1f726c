#pragma once

#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

namespace thinkmt::net {

struct RetryPolicy {
  int max_retries = 5;
  std::chrono::milliseconds base_delay{1000};
  /// Each delay is scaled by a factor drawn from [1 - jitter, 1 + jitter].
  double jitter = 0.5;
};

/// Delay before retry number `attempt` (0-based): base * 2^attempt, jittered.
inline std::chrono::duration<double, std::milli> backoff_delay(const RetryPolicy& p, int attempt) {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  std::uniform_real_distribution<double> dist(1.0 - p.jitter, 1.0 + p.jitter);
  return std::chrono::duration<double, std::milli>(static_cast<double>(p.base_delay.count()) *
                                                   std::ldexp(1.0, attempt) * dist(rng));
}

/// Calls `fn` until it returns without throwing `Transient`, sleeping
/// between attempts. After max_retries retries, `give_up(last_message)` is
/// called; it must throw.
template <class Transient, class Fn, class GiveUp>
auto with_retries(const RetryPolicy& policy, Fn&& fn, GiveUp&& give_up) -> decltype(fn()) {
  std::string last;
  for (int attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const Transient& e) {
      last = e.what();
    }
    if (attempt >= policy.max_retries) break;
    std::this_thread::sleep_for(backoff_delay(policy, attempt));
  }
  give_up(last);
  throw std::logic_error("retry give-up handler returned");
}

}  // namespace thinkmt::net
