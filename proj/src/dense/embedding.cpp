#include "hybrid/embedding.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <future>
#include <random>
#include <thread>

#include <json.hpp>

#include "hybrid/digest.hpp"
#include "hybrid/error.hpp"
#include "hybrid/kernels.hpp"
#include "hybrid/tokenizer.hpp"

namespace hybrid {

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ContractViolation("embedding vector has no components");
  for (double v : values_) {
    if (!std::isfinite(v)) throw ContractViolation("embedding vector has a non-finite component");
  }
  norm_ = std::sqrt(kernels::active().squared_norm(values_.data(), values_.size()));
  if (!(norm_ > 0.0)) throw ContractViolation("embedding vector has zero norm");
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch("cosine of " + std::to_string(a.dim()) + "-d and " +
                            std::to_string(b.dim()) + "-d vectors");
  }
  const double dot = kernels::active().dot(a.data(), b.data(), a.dim());
  return std::clamp(dot / (a.norm() * b.norm()), -1.0, 1.0);
}

std::string_view to_string(EmbeddingKind kind) {
  switch (kind) {
    case EmbeddingKind::remote_http: return "remote_http";
    case EmbeddingKind::deterministic_test: return "deterministic_test";
    case EmbeddingKind::cached: return "cached";
  }
  return "unknown";
}

EmbeddingKind parse_embedding_kind(std::string_view name) {
  if (name == "remote_http") return EmbeddingKind::remote_http;
  if (name == "deterministic_test") return EmbeddingKind::deterministic_test;
  if (name == "cached") return EmbeddingKind::cached;
  throw ConfigError("unknown embedding provider kind '" + std::string(name) + "'");
}

void EmbeddingProviderConfig::validate() const {
  switch (kind) {
    case EmbeddingKind::remote_http:
      if (endpoint.empty()) throw ConfigError("remote embedding provider needs an endpoint");
      if (api_key_env.empty()) throw ConfigError("remote embedding provider needs api_key_env");
      [[fallthrough]];
    case EmbeddingKind::deterministic_test:
      if (dim == 0) throw ConfigError("embedding dim must be at least 1");
      if (batch_size == 0) throw ConfigError("embedding batch_size must be at least 1");
      break;
    case EmbeddingKind::cached:
      if (cache_dir.empty()) throw ConfigError("cached embedding provider needs cache_dir");
      if (!inner) throw ConfigError("cached embedding provider needs an inner provider");
      if (inner->kind == EmbeddingKind::cached) throw ConfigError("nested embedding caches");
      inner->validate();
      break;
  }
}

const std::string& EmbeddingProviderConfig::effective_model_id() const {
  return kind == EmbeddingKind::cached && inner ? inner->model_id : model_id;
}

namespace {

void require_texts(std::span<const std::string> texts) {
  if (texts.empty()) throw ContractViolation("embed() called with no texts");
  for (const auto& t : texts) {
    if (t.empty()) throw ContractViolation("embed() called with an empty text");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Deterministic embedder

DeterministicEmbedder::DeterministicEmbedder(std::string model_id, std::size_t dim,
                                             std::uint64_t seed)
    : model_id_(std::move(model_id)), dim_(dim), seed_(seed) {
  if (dim_ == 0) throw ConfigError("embedding dim must be at least 1");
}

EmbeddingVector DeterministicEmbedder::embed_one(std::string_view text) const {
  const std::uint64_t basis = kFnvOffset ^ mix64(seed_);
  std::vector<double> v(dim_, 0.0);
  const auto add = [&](std::string_view feature, double weight) {
    const std::uint64_t h = mix64(fnv1a64(feature, basis));
    const double sign = (h >> 63) ? -1.0 : 1.0;
    v[h % dim_] += sign * weight;
  };

  static const Tokenizer words(TokenizerVariant::word_lower);
  for (const auto& word : words(text)) {
    add("w:" + word, 1.0);
    std::u32string marked = U"^" + unicode::decode_utf8(word) + U"$";
    for (std::size_t i = 0; i + 3 <= marked.size(); ++i) {
      std::string gram = "c:";
      for (std::size_t j = i; j < i + 3; ++j) unicode::append_utf8(gram, marked[j]);
      add(gram, 0.5);
    }
  }

  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq == 0.0) {
    // No usable tokens, or features cancelled out.
    v[mix64(fnv1a64(text, basis)) % dim_] = 1.0;
  } else {
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv;
  }
  return EmbeddingVector(std::move(v));
}

std::vector<EmbeddingVector> DeterministicEmbedder::embed(std::span<const std::string> texts) {
  require_texts(texts);
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

// ---------------------------------------------------------------------------
// Remote embedder

RemoteEmbedder::RemoteEmbedder(const EmbeddingProviderConfig& config,
                               std::shared_ptr<HttpTransport> transport)
    : config_(config), transport_(std::move(transport)) {
  config_.validate();
  if (!transport_) transport_ = make_http_transport();
  credential_ = read_credential(config_.api_key_env);
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(std::span<const std::string> texts) {
  nlohmann::json request;
  request["model"] = config_.model_id;
  request["input"] = std::vector<std::string>(texts.begin(), texts.end());
  const std::string body = request.dump();
  const HttpHeaders headers{{"Authorization", "Bearer " + credential_}};

  HttpResponse response;
  int attempt = 0;
  for (;; ++attempt) {
    ++requests_;
    response = transport_->post_json(config_.endpoint, body, headers);
    if (response.ok()) break;
    if (!response.retryable() || attempt >= static_cast<int>(config_.max_retries)) {
      throw ProviderError("embedding request failed: " +
                              (response.error.empty() ? response.body.substr(0, 200) : response.error),
                          response.status, attempt);
    }
    std::this_thread::sleep_for(config_.retry_backoff * (attempt + 1));
  }

  std::vector<std::vector<double>> rows(texts.size());
  try {
    const auto doc = nlohmann::json::parse(response.body);
    const auto& data = doc.at("data");
    if (data.size() != texts.size()) {
      throw ContractViolation("embedding response has " + std::to_string(data.size()) +
                              " vectors for " + std::to_string(texts.size()) + " texts");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      const std::size_t slot = data[i].contains("index") ? data[i].at("index").get<std::size_t>() : i;
      if (slot >= rows.size() || !rows[slot].empty()) {
        throw ContractViolation("embedding response has a bad or repeated index");
      }
      rows[slot] = data[i].at("embedding").get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("malformed embedding response: ") + e.what());
  }

  std::vector<EmbeddingVector> out;
  out.reserve(rows.size());
  for (auto& row : rows) {
    if (row.size() != config_.dim) {
      throw ContractViolation("provider returned a " + std::to_string(row.size()) +
                              "-d vector, config expects " + std::to_string(config_.dim));
    }
    out.emplace_back(std::move(row));
  }
  return out;
}

std::vector<EmbeddingVector> RemoteEmbedder::embed(std::span<const std::string> texts) {
  require_texts(texts);
  std::vector<std::span<const std::string>> batches;
  for (std::size_t i = 0; i < texts.size(); i += config_.batch_size) {
    batches.push_back(texts.subspan(i, std::min(config_.batch_size, texts.size() - i)));
  }

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  const std::size_t width = std::max<std::size_t>(1, config_.parallelism);
  for (std::size_t start = 0; start < batches.size(); start += width) {
    std::vector<std::future<std::vector<EmbeddingVector>>> wave;
    for (std::size_t b = start; b < std::min(batches.size(), start + width); ++b) {
      wave.push_back(std::async(width == 1 ? std::launch::deferred : std::launch::async,
                                [this, batch = batches[b]] { return embed_batch(batch); }));
    }
    for (auto& f : wave) {
      for (auto& v : f.get()) out.push_back(std::move(v));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cache

namespace {

constexpr char kCacheMagic[4] = {'H', 'V', 'C', '1'};

class OfflineProvider final : public EmbeddingProvider {
 public:
  OfflineProvider(std::string model_id, std::size_t dim) : model_id_(std::move(model_id)), dim_(dim) {}
  std::vector<EmbeddingVector> embed(std::span<const std::string>) override {
    throw FixtureMissing("cache_only is set; the live embedding provider is disabled");
  }
  const std::string& model_id() const override { return model_id_; }
  std::size_t dim() const override { return dim_; }

 private:
  std::string model_id_;
  std::size_t dim_;
};

}  // namespace

CachedEmbedder::CachedEmbedder(std::unique_ptr<EmbeddingProvider> inner,
                               std::filesystem::path cache_dir, bool cache_only,
                               std::size_t batch_size)
    : inner_(std::move(inner)),
      cache_dir_(std::move(cache_dir)),
      cache_only_(cache_only),
      batch_size_(std::max<std::size_t>(1, batch_size)) {
  if (!inner_) throw ConfigError("cached embedder needs an inner provider");
}

std::string CachedEmbedder::cache_key(std::string_view text) const {
  std::string material = inner_->model_id();
  material.push_back('\0');
  material.append(text);
  return sha256_hex(material);
}

std::filesystem::path CachedEmbedder::entry_path(std::string_view key) const {
  return cache_dir_ / std::string(key.substr(0, 2)) / (std::string(key) + ".vec");
}

std::optional<EmbeddingVector> CachedEmbedder::lookup(const std::string& key) const {
  std::ifstream in(entry_path(key), std::ios::binary);
  if (!in) return std::nullopt;
  char magic[4];
  std::uint32_t dim = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&dim), sizeof dim);
  if (!in || std::memcmp(magic, kCacheMagic, 4) != 0 || dim != inner_->dim()) {
    throw IoError("corrupt embedding cache entry " + entry_path(key).string());
  }
  std::vector<double> values(dim);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(dim * sizeof(double)));
  if (!in) throw IoError("truncated embedding cache entry " + entry_path(key).string());
  return EmbeddingVector(std::move(values));
}

void CachedEmbedder::store(const std::string& key, const EmbeddingVector& vector) const {
  static_assert(std::endian::native == std::endian::little, "cache layout is little-endian");
  const auto path = entry_path(key);
  std::filesystem::create_directories(path.parent_path());
  thread_local std::mt19937_64 rng(std::random_device{}());
  auto tmp = path;
  tmp += ".tmp" + std::to_string(rng());
  {
    std::ofstream out(tmp, std::ios::binary);
    const auto dim = static_cast<std::uint32_t>(vector.dim());
    out.write(kCacheMagic, 4);
    out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
    out.write(reinterpret_cast<const char*>(vector.data()),
              static_cast<std::streamsize>(vector.dim() * sizeof(double)));
    if (!out) throw IoError("cannot write embedding cache entry " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<EmbeddingVector> CachedEmbedder::embed(std::span<const std::string> texts) {
  require_texts(texts);
  std::vector<std::optional<EmbeddingVector>> slots(texts.size());
  std::vector<std::string> keys(texts.size());
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    keys[i] = cache_key(texts[i]);
    slots[i] = lookup(keys[i]);
    if (slots[i]) {
      ++hits_;
    } else {
      ++misses_;
      missing.push_back(i);
    }
  }
  if (!missing.empty() && cache_only_) {
    throw FixtureMissing("embedding cache miss for key " + keys[missing.front()] + " (" +
                         std::to_string(missing.size()) + " missing, cache_only set)");
  }
  for (std::size_t start = 0; start < missing.size(); start += batch_size_) {
    const std::size_t end = std::min(missing.size(), start + batch_size_);
    std::vector<std::string> batch;
    for (std::size_t j = start; j < end; ++j) batch.push_back(texts[missing[j]]);
    auto vectors = inner_->embed(batch);
    if (vectors.size() != batch.size()) throw ContractViolation("inner provider dropped vectors");
    for (std::size_t j = start; j < end; ++j) {
      auto& v = vectors[j - start];
      if (v.dim() != inner_->dim()) throw ContractViolation("inner provider returned wrong dim");
      // Identical texts in one call share a key; storing twice is harmless.
      store(keys[missing[j]], v);
      slots[missing[j]] = std::move(v);
    }
  }
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// ---------------------------------------------------------------------------

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const EmbeddingProviderConfig& config,
                                                           std::shared_ptr<HttpTransport> transport) {
  config.validate();
  switch (config.kind) {
    case EmbeddingKind::deterministic_test:
      return std::make_unique<DeterministicEmbedder>(config.model_id, config.dim, config.seed);
    case EmbeddingKind::remote_http:
      return std::make_unique<RemoteEmbedder>(config, std::move(transport));
    case EmbeddingKind::cached: {
      std::unique_ptr<EmbeddingProvider> inner;
      // Offline mode never contacts a live provider, so credentials are not required.
      if (config.cache_only && config.inner->kind == EmbeddingKind::remote_http) {
        inner = std::make_unique<OfflineProvider>(config.inner->model_id, config.inner->dim);
      } else {
        inner = make_embedding_provider(*config.inner, std::move(transport));
      }
      return std::make_unique<CachedEmbedder>(std::move(inner), config.cache_dir, config.cache_only,
                                              config.inner->batch_size);
    }
  }
  throw ConfigError("unknown embedding provider kind");
}

std::vector<EmbeddingVector> embed(const EmbeddingProviderConfig& config,
                                   std::span<const std::string> texts,
                                   std::shared_ptr<HttpTransport> transport) {
  return make_embedding_provider(config, std::move(transport))->embed(texts);
}

}  // namespace hybrid
