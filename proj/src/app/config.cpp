#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hybrid/app.hpp"
#include "hybrid/error.hpp"

namespace hybrid::app {

namespace {

using nlohmann::json;

class Reader {
 public:
  Reader(const json& obj, std::string where, const std::filesystem::path& base)
      : obj_(obj), where_(std::move(where)), base_(base) {
    if (!obj_.is_object()) throw ConfigError(where_ + " must be an object");
  }

  // Unknown keys are rejected so a typo never silently becomes a default.
  void allow(std::initializer_list<std::string_view> keys) {
    const std::set<std::string_view> known(keys);
    for (const auto& [key, _] : obj_.items()) {
      if (!known.contains(key)) throw ConfigError("unknown key " + name(key));
    }
  }

  template <typename T>
  void get(std::string_view key, T& target) const {
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      target = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name(key) + " has the wrong type");
    }
  }

  void path(std::string_view key, std::filesystem::path& target) const {
    std::string raw;
    get(key, raw);
    if (!raw.empty()) target = resolve(raw);
  }

  void size(std::string_view key, std::size_t& target) const {
    long long v = static_cast<long long>(target);
    get(key, v);
    if (v < 0) throw ConfigError(name(key) + " must be non-negative");
    target = static_cast<std::size_t>(v);
  }

  void millis(std::string_view key, std::chrono::milliseconds& target) const {
    long long v = target.count();
    get(key, v);
    if (v < 0) throw ConfigError(name(key) + " must be non-negative");
    target = std::chrono::milliseconds(v);
  }

  const json* child(std::string_view key) const {
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string name(std::string_view key) const { return where_ + "." + std::string(key); }
  const std::filesystem::path& base() const { return base_; }

 private:
  std::filesystem::path resolve(const std::string& raw) const {
    const std::filesystem::path p(raw);
    return p.is_absolute() ? p : (base_ / p).lexically_normal();
  }

  const json& obj_;
  std::string where_;
  std::filesystem::path base_;
};

template <typename Enum, typename Parse>
void get_enum(const Reader& r, std::string_view key, Enum& target, Parse parse) {
  std::string raw;
  r.get(key, raw);
  if (raw.empty()) return;
  try {
    target = parse(raw);
  } catch (const ConfigError& e) {
    throw ConfigError(r.name(key) + ": " + e.what());
  }
}

EmbeddingProviderConfig parse_embedding(const json& obj, const std::string& where,
                                        const std::filesystem::path& base) {
  Reader r(obj, where, base);
  r.allow({"kind", "model_id", "dim", "endpoint", "api_key_env", "batch_size", "max_retries",
           "retry_backoff_ms", "parallelism", "seed", "cache_dir", "cache_only", "inner"});
  EmbeddingProviderConfig c;
  get_enum(r, "kind", c.kind, parse_embedding_kind);
  r.get("model_id", c.model_id);
  r.size("dim", c.dim);
  r.get("endpoint", c.endpoint);
  r.get("api_key_env", c.api_key_env);
  r.size("batch_size", c.batch_size);
  r.size("max_retries", c.max_retries);
  r.millis("retry_backoff_ms", c.retry_backoff);
  r.size("parallelism", c.parallelism);
  r.get("seed", c.seed);
  r.path("cache_dir", c.cache_dir);
  r.get("cache_only", c.cache_only);
  if (const auto* inner = r.child("inner")) {
    c.inner = std::make_shared<EmbeddingProviderConfig>(parse_embedding(*inner, where + ".inner", base));
  }
  return c;
}

JudgeConfig parse_judge(const json& obj, const std::filesystem::path& base) {
  Reader r(obj, "judge", base);
  r.allow({"kind", "model_id", "endpoint", "api_key_env", "max_retries", "temperature",
           "retry_backoff_ms", "max_in_flight", "replay_path", "fixed_scores", "strict_parse",
           "oracle_tokenizer"});
  JudgeConfig c;
  get_enum(r, "kind", c.kind, parse_judge_kind);
  r.get("model_id", c.model_id);
  r.get("endpoint", c.endpoint);
  r.get("api_key_env", c.api_key_env);
  r.get("max_retries", c.max_retries);
  r.get("temperature", c.temperature);
  r.millis("retry_backoff_ms", c.retry_backoff);
  r.size("max_in_flight", c.max_in_flight);
  r.path("replay_path", c.replay_path);
  r.get("fixed_scores", c.fixed_scores);
  r.get("strict_parse", c.strict_parse);
  get_enum(r, "oracle_tokenizer", c.oracle_tokenizer, parse_tokenizer_variant);
  return c;
}

}  // namespace

void AppConfig::validate() const {
  if (k == 0) throw ConfigError("k must be at least 1");
  if (pool_n < k) {
    throw ConfigError("pool_n " + std::to_string(pool_n) + " is smaller than k " +
                      std::to_string(k));
  }
  if (parallelism == 0) throw ConfigError("parallelism must be at least 1");
  if (tokenizer == TokenizerVariant::external && tokenizer_table.empty()) {
    throw ConfigError("the external tokenizer needs tokenizer_table");
  }
  bm25.validate();
  embedding.validate();
  judge.validate();
}

AppConfig parse_app_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Reader r(doc, "config", base_dir);
  r.allow({"source_path", "source_language", "corpus_path", "index_dir", "out_dir", "embedding",
           "judge", "bm25", "tokenizer", "tokenizer_table", "pool_n", "k", "fixed_alpha", "seed",
           "max_questions", "parallelism"});
  AppConfig c;
  c.out_dir = base_dir;
  r.path("source_path", c.source_path);
  std::string language;
  r.get("source_language", language);
  if (!language.empty() && language != "auto") {
    try {
      c.source_language = parse_language(language);
    } catch (const Error& e) {
      throw ConfigError(r.name("source_language") + ": " + e.what());
    }
  }
  r.path("corpus_path", c.corpus_path);
  r.path("index_dir", c.index_dir);
  r.path("out_dir", c.out_dir);
  if (const auto* e = r.child("embedding")) c.embedding = parse_embedding(*e, "embedding", base_dir);
  if (const auto* j = r.child("judge")) c.judge = parse_judge(*j, base_dir);
  if (const auto* b = r.child("bm25")) {
    Reader br(*b, "bm25", base_dir);
    br.allow({"k1", "b"});
    br.get("k1", c.bm25.k1);
    br.get("b", c.bm25.b);
  }
  get_enum(r, "tokenizer", c.tokenizer, parse_tokenizer_variant);
  r.path("tokenizer_table", c.tokenizer_table);
  r.size("pool_n", c.pool_n);
  r.size("k", c.k);
  double alpha = c.fixed_alpha.value();
  r.get("fixed_alpha", alpha);
  try {
    c.fixed_alpha = AlphaValue::from_real(alpha);
  } catch (const ContractViolation& e) {
    throw ConfigError(r.name("fixed_alpha") + ": " + e.what());
  }
  r.get("seed", c.seed);
  r.size("max_questions", c.max_questions);
  r.size("parallelism", c.parallelism);
  if (c.index_dir.empty()) c.index_dir = base_dir / "index";
  return c;
}

AppConfig load_app_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto base = std::filesystem::absolute(path).parent_path();
  return parse_app_config(buffer.str(), base);
}

}  // namespace hybrid::app
