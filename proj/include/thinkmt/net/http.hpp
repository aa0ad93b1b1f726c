#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <string>

#include "thinkmt/core/error.hpp"

namespace thinkmt::net {

/// The request never produced an HTTP response (refused, reset, timed out).
class ConnectionError : public Error {
public:
  using Error::Error;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Minimal blocking HTTP(S) client bound to one base URL such as
/// `http://localhost:8000/v1`. Safe for concurrent use.
class HttpClient {
public:
  explicit HttpClient(const std::string& base_url, std::chrono::milliseconds timeout = std::chrono::seconds(600));
  ~HttpClient();
  HttpClient(const HttpClient&) = delete;
  HttpClient& operator=(const HttpClient&) = delete;

  HttpResponse post_json(const std::string& path, const std::string& body,
                         const std::map<std::string, std::string>& headers = {}) const;
  HttpResponse get(const std::string& path, const std::map<std::string, std::string>& headers = {}) const;

  const std::string& base_url() const { return base_url_; }

private:
  std::string base_url_;
  std::string origin_;
  std::string prefix_;
  std::chrono::milliseconds timeout_;
};

/// True for statuses worth retrying (408, 429 and 5xx).
bool is_transient_status(int status) noexcept;

}  // namespace thinkmt::net
