#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "thinkmt/net/http.hpp"

#include <httplib.h>

namespace thinkmt::net {

namespace {

httplib::Headers to_headers(const std::map<std::string, std::string>& headers) {
  httplib::Headers out;
  for (const auto& [k, v] : headers) out.emplace(k, v);
  return out;
}

}  // namespace

HttpClient::HttpClient(const std::string& base_url, std::chrono::milliseconds timeout)
    : base_url_(base_url), timeout_(timeout) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgument("URL needs a scheme: " + base_url);
  const auto path_start = base_url.find('/', scheme_end + 3);
  origin_ = base_url.substr(0, path_start);
  prefix_ = path_start == std::string::npos ? "" : base_url.substr(path_start);
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
}

HttpClient::~HttpClient() = default;

// httplib::Client is not safe to share between threads, so each call gets its
// own short-lived client.
HttpResponse HttpClient::post_json(const std::string& path, const std::string& body,
                                   const std::map<std::string, std::string>& headers) const {
  httplib::Client cli(origin_);
  cli.set_connection_timeout(std::min(timeout_, std::chrono::milliseconds(30000)));
  cli.set_read_timeout(timeout_);
  cli.set_write_timeout(timeout_);
  auto res = cli.Post(prefix_ + path, to_headers(headers), body, "application/json");
  if (!res) throw ConnectionError("POST " + base_url_ + path + " failed: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

HttpResponse HttpClient::get(const std::string& path, const std::map<std::string, std::string>& headers) const {
  httplib::Client cli(origin_);
  cli.set_connection_timeout(std::min(timeout_, std::chrono::milliseconds(30000)));
  cli.set_read_timeout(timeout_);
  auto res = cli.Get(prefix_ + path, to_headers(headers));
  if (!res) throw ConnectionError("GET " + base_url_ + path + " failed: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

bool is_transient_status(int status) noexcept {
  return status == 408 || status == 429 || status >= 500;
}

}  // namespace thinkmt::net
