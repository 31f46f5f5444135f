#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <utility>

#include "hybrid/http.hpp"
#include "hybrid/tokenizer.hpp"

namespace hybrid {

/// Integer effectiveness grade in [0, 5].
class EffectivenessScore {
 public:
  static constexpr int kMin = 0;
  static constexpr int kMax = 5;

  /// Throws ContractViolation outside [0, 5].
  explicit EffectivenessScore(int value);
  static EffectivenessScore clamped(long long value);

  int value() const noexcept { return value_; }
  auto operator<=>(const EffectivenessScore&) const = default;

 private:
  int value_;
};

struct JudgeVerdict {
  EffectivenessScore s_dense{0};
  EffectivenessScore s_bm25{0};
  std::string raw_response;
  int retries_used = 0;
  bool is_fallback = false;  // implies both scores are 0

  bool operator==(const JudgeVerdict&) const = default;
};

enum class JudgeKind { remote_llm, oracle, replay, fixed };

std::string_view to_string(JudgeKind kind);
JudgeKind parse_judge_kind(std::string_view name);

struct JudgeConfig {
  JudgeKind kind = JudgeKind::fixed;
  std::string model_id;
  std::string endpoint;
  std::string api_key_env = "JUDGE_API_KEY";
  int max_retries = 2;
  double temperature = 0.0;
  std::chrono::milliseconds retry_backoff{500};
  std::size_t max_in_flight = 4;
  std::filesystem::path replay_path;
  std::pair<int, int> fixed_scores{0, 0};
  bool strict_parse = false;
  TokenizerVariant oracle_tokenizer = TokenizerVariant::word_lower;

  /// Throws ConfigError.
  void validate() const;
};

/// The effectiveness-scoring prompt with {question}, {vector_reference} and
/// {bm25_reference} placeholders.
std::string_view prompt_template();

/// Substitutes the three placeholders in one pass; inserted text is never
/// re-scanned, so braces in the arguments survive literally.
std::string render_prompt(std::string_view question, std::string_view vector_reference,
                          std::string_view bm25_reference);

/// First two integer literals in `response` as (dense, bm25), each clamped
/// into [0, 5]. A digit run glued to a letter ("BM25") is not a literal, and
/// a leading <think>...</think> block is skipped. Strict mode accepts only
/// "a b" with both in [0, 5]. Throws ParseError.
std::pair<int, int> parse_scores(std::string_view response, bool strict = false);

struct JudgeRequest {
  std::string_view question;
  std::string_view dense_top1_text;
  std::string_view bm25_top1_text;
  std::optional<std::string_view> gold_text;
};

class Judge {
 public:
  virtual ~Judge() = default;
  /// Safe to call concurrently.
  virtual JudgeVerdict evaluate(const JudgeRequest& request) = 0;
  virtual JudgeKind kind() const = 0;
};

class FixedJudge final : public Judge {
 public:
  FixedJudge(int dense, int bm25);
  JudgeVerdict evaluate(const JudgeRequest& request) override;
  JudgeKind kind() const override { return JudgeKind::fixed; }

 private:
  EffectivenessScore dense_;
  EffectivenessScore bm25_;
};

/// Test instrument that knows the gold paragraph. An exact match scores 5;
/// otherwise the token-set Jaccard overlap J with the gold text maps to
/// 4 (J >= 0.5), 3 (J >= 0.3), 2 (J >= 0.15), 1 (J > 0) or 0.
class OracleJudge final : public Judge {
 public:
  explicit OracleJudge(Tokenizer tokenizer = Tokenizer());
  JudgeVerdict evaluate(const JudgeRequest& request) override;
  JudgeKind kind() const override { return JudgeKind::oracle; }

  int grade(std::string_view candidate, std::string_view gold) const;

 private:
  Tokenizer tokenizer_;
};

/// SHA-256 over the JSON array [question, dense_top1, bm25_top1].
std::string replay_key(std::string_view question, std::string_view dense_top1,
                       std::string_view bm25_top1);

struct ReplayRecord {
  std::string key_hash;
  int s_dense = 0;
  int s_bm25 = 0;
  std::string raw_response;

  bool operator==(const ReplayRecord&) const = default;
};

/// Line-delimited replay fixtures, kept sorted by key.
class ReplayStore {
 public:
  static ReplayStore load(const std::filesystem::path& path);
  static ReplayStore read(std::istream& in, std::string_view origin = "<stream>");

  void put(ReplayRecord record);
  const ReplayRecord* find(const std::string& key) const;
  std::size_t size() const noexcept { return records_.size(); }

  void write(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;

 private:
  std::map<std::string, ReplayRecord> records_;
};

class ReplayJudge final : public Judge {
 public:
  explicit ReplayJudge(ReplayStore store);
  /// Throws FixtureMissing for an unrecorded triple.
  JudgeVerdict evaluate(const JudgeRequest& request) override;
  JudgeKind kind() const override { return JudgeKind::replay; }

 private:
  ReplayStore store_;
};

/// Chat-completion judge. A parse or transport failure is retried up to
/// max_retries times; after that the verdict falls back to (0, 0).
class RemoteLlmJudge final : public Judge {
 public:
  RemoteLlmJudge(JudgeConfig config, std::shared_ptr<HttpTransport> transport);
  JudgeVerdict evaluate(const JudgeRequest& request) override;
  JudgeKind kind() const override { return JudgeKind::remote_llm; }

  std::string request_body(std::string_view prompt) const;
  /// Assistant text from a chat-completion response. Throws ParseError.
  static std::string extract_content(std::string_view body);

 private:
  JudgeConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  std::string credential_;
  std::counting_semaphore<> in_flight_;
};

/// Forwards to another judge and records every verdict as a replay fixture.
class RecordingJudge final : public Judge {
 public:
  explicit RecordingJudge(Judge& inner) : inner_(inner) {}
  JudgeVerdict evaluate(const JudgeRequest& request) override;
  JudgeKind kind() const override { return inner_.kind(); }

  ReplayStore store() const;

 private:
  Judge& inner_;
  mutable std::mutex mutex_;
  ReplayStore store_;
};

std::unique_ptr<Judge> make_judge(const JudgeConfig& config,
                                  std::shared_ptr<HttpTransport> transport = nullptr);

/// One-shot convenience over make_judge.
JudgeVerdict judge(const JudgeConfig& config, std::string_view question,
                   std::string_view dense_top1_text, std::string_view bm25_top1_text,
                   std::optional<std::string_view> gold_text = std::nullopt,
                   std::shared_ptr<HttpTransport> transport = nullptr);

}  // namespace hybrid
