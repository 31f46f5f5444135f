#include "hybrid/judge.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <thread>
#include <unordered_set>

#include <json.hpp>

#include "hybrid/digest.hpp"
#include "hybrid/error.hpp"

namespace hybrid {

EffectivenessScore::EffectivenessScore(int value) : value_(value) {
  if (value < kMin || value > kMax) {
    throw ContractViolation("effectiveness score " + std::to_string(value) + " outside [0, 5]");
  }
}

EffectivenessScore EffectivenessScore::clamped(long long value) {
  return EffectivenessScore(static_cast<int>(std::clamp<long long>(value, kMin, kMax)));
}

std::string_view to_string(JudgeKind kind) {
  switch (kind) {
    case JudgeKind::remote_llm: return "remote_llm";
    case JudgeKind::oracle: return "oracle";
    case JudgeKind::replay: return "replay";
    case JudgeKind::fixed: return "fixed";
  }
  return "unknown";
}

JudgeKind parse_judge_kind(std::string_view name) {
  if (name == "remote_llm") return JudgeKind::remote_llm;
  if (name == "oracle") return JudgeKind::oracle;
  if (name == "replay") return JudgeKind::replay;
  if (name == "fixed") return JudgeKind::fixed;
  throw ConfigError("unknown judge kind '" + std::string(name) + "'");
}

void JudgeConfig::validate() const {
  if (max_retries < 0) throw ConfigError("judge max_retries must be >= 0");
  switch (kind) {
    case JudgeKind::remote_llm:
      if (endpoint.empty()) throw ConfigError("remote_llm judge needs an endpoint");
      if (model_id.empty()) throw ConfigError("remote_llm judge needs a model_id");
      if (api_key_env.empty()) throw ConfigError("remote_llm judge needs api_key_env");
      if (max_in_flight == 0) throw ConfigError("judge max_in_flight must be at least 1");
      break;
    case JudgeKind::replay:
      if (replay_path.empty()) throw ConfigError("replay judge needs replay_path");
      break;
    case JudgeKind::fixed: {
      const auto [d, b] = fixed_scores;
      if (d < 0 || d > 5 || b < 0 || b > 5) throw ConfigError("fixed judge scores must lie in [0, 5]");
      break;
    }
    case JudgeKind::oracle:
      break;
  }
}

// ---------------------------------------------------------------------------
// Response parsing

namespace {

bool ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool ascii_digit(char c) { return c >= '0' && c <= '9'; }

std::string_view skip_reasoning(std::string_view text) {
  const auto open = text.find("<think>");
  if (open == std::string_view::npos) return text;
  const auto close = text.find("</think>", open);
  if (close == std::string_view::npos) return text;
  return text.substr(close + 8);
}

}  // namespace

std::pair<int, int> parse_scores(std::string_view response, bool strict) {
  const auto text = skip_reasoning(response);
  if (strict) {
    static const std::regex exact(R"(^\s*([0-5])[ \t]+([0-5])\s*$)");
    std::cmatch m;
    if (!std::regex_match(text.begin(), text.end(), m, exact)) {
      throw ParseError("judge reply is not two scores separated by a space");
    }
    return {m[1].str()[0] - '0', m[2].str()[0] - '0'};
  }

  long long found[2] = {0, 0};
  int count = 0;
  std::size_t i = 0;
  while (i < text.size() && count < 2) {
    if (!ascii_digit(text[i])) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    long long value = 0;
    while (i < text.size() && ascii_digit(text[i])) {
      value = std::min<long long>(value * 10 + (text[i] - '0'), 1'000'000);
      ++i;
    }
    const bool glued_before = start > 0 && ascii_alpha(text[start - 1]);
    const bool glued_after = i < text.size() && ascii_alpha(text[i]);
    if (glued_before || glued_after) continue;
    const bool negative = start > 0 && text[start - 1] == '-' &&
                          (start == 1 || !(ascii_alpha(text[start - 2]) || ascii_digit(text[start - 2])));
    found[count++] = negative ? -value : value;
  }
  if (count < 2) throw ParseError("judge reply has fewer than two integers");
  return {EffectivenessScore::clamped(found[0]).value(), EffectivenessScore::clamped(found[1]).value()};
}

// ---------------------------------------------------------------------------
// Fixed and oracle judges

FixedJudge::FixedJudge(int dense, int bm25) : dense_(dense), bm25_(bm25) {}

JudgeVerdict FixedJudge::evaluate(const JudgeRequest&) {
  JudgeVerdict v;
  v.s_dense = dense_;
  v.s_bm25 = bm25_;
  v.raw_response = std::to_string(dense_.value()) + " " + std::to_string(bm25_.value());
  return v;
}

OracleJudge::OracleJudge(Tokenizer tokenizer) : tokenizer_(std::move(tokenizer)) {}

int OracleJudge::grade(std::string_view candidate, std::string_view gold) const {
  if (candidate.empty()) return 0;
  if (candidate == gold) return 5;
  const auto a = tokenizer_(candidate);
  const auto b = tokenizer_(gold);
  const std::unordered_set<std::string> sa(a.begin(), a.end());
  const std::unordered_set<std::string> sb(b.begin(), b.end());
  std::size_t shared = 0;
  for (const auto& t : sa) shared += sb.contains(t) ? 1 : 0;
  const std::size_t total = sa.size() + sb.size() - shared;
  if (total == 0 || shared == 0) return 0;
  const double j = static_cast<double>(shared) / static_cast<double>(total);
  if (j >= 0.5) return 4;
  if (j >= 0.3) return 3;
  if (j >= 0.15) return 2;
  return 1;
}

JudgeVerdict OracleJudge::evaluate(const JudgeRequest& request) {
  if (!request.gold_text) throw ConfigError("oracle judge needs the gold paragraph text");
  JudgeVerdict v;
  v.s_dense = EffectivenessScore(grade(request.dense_top1_text, *request.gold_text));
  v.s_bm25 = EffectivenessScore(grade(request.bm25_top1_text, *request.gold_text));
  v.raw_response = std::to_string(v.s_dense.value()) + " " + std::to_string(v.s_bm25.value());
  return v;
}

// ---------------------------------------------------------------------------
// Replay fixtures

std::string replay_key(std::string_view question, std::string_view dense_top1,
                       std::string_view bm25_top1) {
  const nlohmann::json material = {std::string(question), std::string(dense_top1),
                                   std::string(bm25_top1)};
  return sha256_hex(material.dump());
}

ReplayStore ReplayStore::read(std::istream& in, std::string_view origin) {
  ReplayStore store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ReplayRecord r{j.at("key_hash").get<std::string>(), j.at("s_dense").get<int>(),
                     j.at("s_bm25").get<int>(), j.value("raw_response", std::string())};
      if (r.s_dense < 0 || r.s_dense > 5 || r.s_bm25 < 0 || r.s_bm25 > 5) {
        throw ParseError(std::string(origin) + ":" + std::to_string(line_no) +
                         ": score outside [0, 5]");
      }
      store.put(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string(origin) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return store;
}

ReplayStore ReplayStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open replay fixtures " + path.string());
  return read(in, path.string());
}

void ReplayStore::put(ReplayRecord record) {
  auto key = record.key_hash;
  records_.insert_or_assign(std::move(key), std::move(record));
}

const ReplayRecord* ReplayStore::find(const std::string& key) const {
  const auto it = records_.find(key);
  return it == records_.end() ? nullptr : &it->second;
}

void ReplayStore::write(std::ostream& out) const {
  for (const auto& [key, r] : records_) {
    nlohmann::ordered_json j;
    j["key_hash"] = r.key_hash;
    j["s_dense"] = r.s_dense;
    j["s_bm25"] = r.s_bm25;
    j["raw_response"] = r.raw_response;
    out << j.dump() << '\n';
  }
}

void ReplayStore::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write replay fixtures " + path.string());
  write(out);
}

ReplayJudge::ReplayJudge(ReplayStore store) : store_(std::move(store)) {}

JudgeVerdict ReplayJudge::evaluate(const JudgeRequest& request) {
  const auto key = replay_key(request.question, request.dense_top1_text, request.bm25_top1_text);
  const auto* r = store_.find(key);
  if (!r) {
    throw FixtureMissing("no replay fixture for key " + key + " (question '" +
                         std::string(request.question.substr(0, 80)) + "')");
  }
  JudgeVerdict v;
  v.s_dense = EffectivenessScore(r->s_dense);
  v.s_bm25 = EffectivenessScore(r->s_bm25);
  v.raw_response = r->raw_response;
  return v;
}

JudgeVerdict RecordingJudge::evaluate(const JudgeRequest& request) {
  auto verdict = inner_.evaluate(request);
  std::lock_guard lock(mutex_);
  store_.put({replay_key(request.question, request.dense_top1_text, request.bm25_top1_text),
              verdict.s_dense.value(), verdict.s_bm25.value(), verdict.raw_response});
  return verdict;
}

ReplayStore RecordingJudge::store() const {
  std::lock_guard lock(mutex_);
  return store_;
}

// ---------------------------------------------------------------------------
// Remote judge

RemoteLlmJudge::RemoteLlmJudge(JudgeConfig config, std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      in_flight_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config_.max_in_flight))) {
  config_.validate();
  if (!transport_) transport_ = make_http_transport();
  credential_ = read_credential(config_.api_key_env);
}

std::string RemoteLlmJudge::request_body(std::string_view prompt) const {
  nlohmann::ordered_json body;
  body["model"] = config_.model_id;
  body["temperature"] = config_.temperature;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", std::string(prompt)}}});
  return body.dump();
}

std::string RemoteLlmJudge::extract_content(std::string_view body) {
  try {
    const auto doc = nlohmann::json::parse(body);
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw ParseError("chat response content is not a string");
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed chat response: ") + e.what());
  }
}

JudgeVerdict RemoteLlmJudge::evaluate(const JudgeRequest& request) {
  const std::string body = request_body(
      render_prompt(request.question, request.dense_top1_text, request.bm25_top1_text));
  const HttpHeaders headers{{"Authorization", "Bearer " + credential_}};

  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  std::string last_raw;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(config_.retry_backoff * attempt);
    const auto response = transport_->post_json(config_.endpoint, body, headers);
    if (!response.ok()) {
      last_raw = response.error.empty() ? response.body : response.error;
      continue;
    }
    try {
      last_raw = extract_content(response.body);
      const auto [dense, bm25] = parse_scores(last_raw, config_.strict_parse);
      JudgeVerdict v;
      v.s_dense = EffectivenessScore(dense);
      v.s_bm25 = EffectivenessScore(bm25);
      v.raw_response = last_raw;
      v.retries_used = attempt;
      return v;
    } catch (const ParseError&) {
      continue;
    }
  }

  JudgeVerdict fallback;
  fallback.raw_response = last_raw;
  fallback.retries_used = config_.max_retries;
  fallback.is_fallback = true;
  return fallback;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Judge> make_judge(const JudgeConfig& config, std::shared_ptr<HttpTransport> transport) {
  config.validate();
  switch (config.kind) {
    case JudgeKind::fixed:
      return std::make_unique<FixedJudge>(config.fixed_scores.first, config.fixed_scores.second);
    case JudgeKind::oracle:
      return std::make_unique<OracleJudge>(Tokenizer(config.oracle_tokenizer));
    case JudgeKind::replay:
      return std::make_unique<ReplayJudge>(ReplayStore::load(config.replay_path));
    case JudgeKind::remote_llm:
      return std::make_unique<RemoteLlmJudge>(config, std::move(transport));
  }
  throw ConfigError("unknown judge kind");
}

JudgeVerdict judge(const JudgeConfig& config, std::string_view question,
                   std::string_view dense_top1_text, std::string_view bm25_top1_text,
                   std::optional<std::string_view> gold_text,
                   std::shared_ptr<HttpTransport> transport) {
  if (question.empty()) throw ContractViolation("judge() needs a non-empty question");
  auto j = make_judge(config, std::move(transport));
  return j->evaluate({question, dense_top1_text, bm25_top1_text, gold_text});
}

}  // namespace hybrid
