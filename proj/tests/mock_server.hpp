#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>

namespace testsupport {

/// Local HTTP server on an ephemeral port, for client tests.
class MockServer {
public:
  struct Request {
    std::string method;
    std::string path;
    std::string body;
    std::map<std::string, std::string> headers;
  };
  struct Reply {
    int status = 200;
    std::string body;
  };
  using Handler = std::function<Reply(const Request&)>;

  MockServer();
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  /// Routes must be registered before start().
  void get(const std::string& path, Handler h);
  void post(const std::string& path, Handler h);
  void start();
  void stop();

  std::string url() const;
  int port() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// A port nothing listens on.
int closed_port();

}  // namespace testsupport
