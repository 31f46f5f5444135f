#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace hybrid {

struct HttpResponse {
  int status = 0;  // 0 when the request never completed
  std::string body;
  std::string error;

  bool ok() const noexcept { return status >= 200 && status < 300; }
  /// Transport failures, throttling and server errors are worth retrying.
  bool retryable() const noexcept { return status == 0 || status == 429 || status >= 500; }
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// POST-a-JSON-body seam. Remote providers depend on this so tests can
/// script responses without a network.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post_json(const std::string& url, const std::string& body,
                                 const HttpHeaders& headers) = 0;
};

/// cpp-httplib backed transport; http and https URLs.
std::shared_ptr<HttpTransport> make_http_transport(
    std::chrono::seconds timeout = std::chrono::seconds(120));

/// Value of `env_var`; throws ConfigError when unset or empty.
std::string read_credential(const std::string& env_var);

}  // namespace hybrid
