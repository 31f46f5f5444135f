#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hybrid/http.hpp"

namespace hybrid {

/// Finite, non-zero real vector.
class EmbeddingVector {
 public:
  /// Throws ContractViolation for an empty, non-finite or zero-norm input.
  explicit EmbeddingVector(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t dim() const noexcept { return values_.size(); }
  double norm() const noexcept { return norm_; }
  const double* data() const noexcept { return values_.data(); }

  bool operator==(const EmbeddingVector& other) const { return values_ == other.values_; }

 private:
  std::vector<double> values_;
  double norm_ = 0.0;
};

/// dot(a, b) / (|a| |b|) clamped to [-1, 1]. Throws DimensionMismatch.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

enum class EmbeddingKind { remote_http, deterministic_test, cached };

std::string_view to_string(EmbeddingKind kind);
EmbeddingKind parse_embedding_kind(std::string_view name);

struct EmbeddingProviderConfig {
  EmbeddingKind kind = EmbeddingKind::deterministic_test;
  std::string model_id = "hashed-ngram-v1";
  std::size_t dim = 256;
  std::string endpoint;                         // remote_http
  std::string api_key_env = "EMBEDDING_API_KEY";  // remote_http
  std::size_t batch_size = 64;
  std::size_t max_retries = 2;
  std::chrono::milliseconds retry_backoff{500};
  std::size_t parallelism = 1;  // concurrent remote batches
  std::uint64_t seed = 0;       // deterministic_test
  std::filesystem::path cache_dir;  // cached
  bool cache_only = false;          // cached: a miss is an error, never a provider call
  std::shared_ptr<EmbeddingProviderConfig> inner;  // cached

  /// Throws ConfigError.
  void validate() const;
  /// Model id of the provider that actually produces the vectors.
  const std::string& effective_model_id() const;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  /// One vector per text, in order. Texts must be non-empty.
  virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
  virtual const std::string& model_id() const = 0;
  virtual std::size_t dim() const = 0;
};

/// Offline embedder. Each word contributes a signed hashed feature for itself
/// and for every character trigram of "^word$"; the sum is L2-normalised.
/// Vectors are pure functions of (seed, dim, text).
class DeterministicEmbedder final : public EmbeddingProvider {
 public:
  DeterministicEmbedder(std::string model_id, std::size_t dim, std::uint64_t seed = 0);

  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;
  EmbeddingVector embed_one(std::string_view text) const;
  const std::string& model_id() const override { return model_id_; }
  std::size_t dim() const override { return dim_; }

 private:
  std::string model_id_;
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Batch embedding over HTTP. Request: {"model", "input": [texts]}.
/// Response: {"data": [{"index", "embedding": [...]}]}.
class RemoteEmbedder final : public EmbeddingProvider {
 public:
  RemoteEmbedder(const EmbeddingProviderConfig& config, std::shared_ptr<HttpTransport> transport);

  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;
  const std::string& model_id() const override { return config_.model_id; }
  std::size_t dim() const override { return config_.dim; }

  std::size_t requests_sent() const noexcept { return requests_.load(); }

 private:
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts);

  EmbeddingProviderConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  std::string credential_;
  std::atomic<std::size_t> requests_{0};
};

/// Content-addressed on-disk cache in front of another provider. Entries are
/// keyed by SHA-256 of (model id, text) and written atomically, so concurrent
/// writers of distinct keys never interfere.
class CachedEmbedder final : public EmbeddingProvider {
 public:
  CachedEmbedder(std::unique_ptr<EmbeddingProvider> inner, std::filesystem::path cache_dir,
                 bool cache_only = false, std::size_t batch_size = 64);

  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;
  const std::string& model_id() const override { return inner_->model_id(); }
  std::size_t dim() const override { return inner_->dim(); }

  std::size_t hits() const noexcept { return hits_.load(); }
  std::size_t misses() const noexcept { return misses_.load(); }

  std::string cache_key(std::string_view text) const;
  std::filesystem::path entry_path(std::string_view key) const;

 private:
  std::optional<EmbeddingVector> lookup(const std::string& key) const;
  void store(const std::string& key, const EmbeddingVector& vector) const;

  std::unique_ptr<EmbeddingProvider> inner_;
  std::filesystem::path cache_dir_;
  bool cache_only_;
  std::size_t batch_size_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

/// `transport` is only used by remote providers; nullptr means cpp-httplib.
std::unique_ptr<EmbeddingProvider> make_embedding_provider(
    const EmbeddingProviderConfig& config, std::shared_ptr<HttpTransport> transport = nullptr);

/// One-shot convenience over make_embedding_provider.
std::vector<EmbeddingVector> embed(const EmbeddingProviderConfig& config,
                                   std::span<const std::string> texts,
                                   std::shared_ptr<HttpTransport> transport = nullptr);

}  // namespace hybrid
