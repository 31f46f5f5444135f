#pragma once

#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hybrid/corpus.hpp"
#include "hybrid/http.hpp"

namespace hybrid::testing {

inline std::filesystem::path source_dir() { return HYBRID_SOURCE_DIR; }
inline std::filesystem::path data_path(const std::string& rel) { return source_dir() / rel; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
}

class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("hybrid-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

class ScopedEnv {
 public:
  ScopedEnv(std::string name, const std::string& value) : name_(std::move(name)) {
    if (const char* old = std::getenv(name_.c_str())) old_ = old;
    ::setenv(name_.c_str(), value.c_str(), 1);
  }
  ~ScopedEnv() {
    if (old_) {
      ::setenv(name_.c_str(), old_->c_str(), 1);
    } else {
      ::unsetenv(name_.c_str());
    }
  }

 private:
  std::string name_;
  std::optional<std::string> old_;
};

/// Replays canned responses in order; the last one repeats once exhausted.
class ScriptedTransport final : public HttpTransport {
 public:
  struct Call {
    std::string url;
    std::string body;
    HttpHeaders headers;
  };

  explicit ScriptedTransport(std::vector<HttpResponse> script) : script_(std::move(script)) {}

  HttpResponse post_json(const std::string& url, const std::string& body,
                         const HttpHeaders& headers) override {
    std::lock_guard lock(mutex_);
    calls_.push_back({url, body, headers});
    const auto i = std::min(next_++, script_.size() - 1);
    return script_[i];
  }

  std::vector<Call> calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
  }

 private:
  mutable std::mutex mutex_;
  std::vector<HttpResponse> script_;
  std::size_t next_ = 0;
  std::vector<Call> calls_;
};

inline HttpResponse ok(std::string body) { return {200, std::move(body), {}}; }

/// Paragraphs "d00", "d01", ... in article "a0", no queries.
inline Corpus corpus_of(const std::vector<std::string>& texts) {
  std::vector<Paragraph> ps;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "d%02zu", i);
    ps.push_back({id, "a0", texts[i]});
  }
  return Corpus(std::move(ps), {});
}

}  // namespace hybrid::testing
