#include "hybrid/http.hpp"

#include <cstdlib>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "hybrid/error.hpp"

namespace hybrid {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint '" + url + "' has no scheme");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport final : public HttpTransport {
 public:
  explicit HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

  HttpResponse post_json(const std::string& url, const std::string& body,
                         const HttpHeaders& headers) override {
    const auto parts = split_url(url);
    httplib::Client client(parts.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);

    HttpResponse out;
    auto result = client.Post(parts.path, h, body, "application/json");
    if (!result) {
      out.error = httplib::to_string(result.error());
      return out;
    }
    out.status = result->status;
    out.body = result->body;
    return out;
  }

 private:
  std::chrono::seconds timeout_;
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport(std::chrono::seconds timeout) {
  return std::make_shared<HttplibTransport>(timeout);
}

std::string read_credential(const std::string& env_var) {
  if (env_var.empty()) throw ConfigError("no credential environment variable configured");
  const char* value = std::getenv(env_var.c_str());
  if (!value || !*value) throw ConfigError("environment variable " + env_var + " is not set");
  return value;
}

}  // namespace hybrid
