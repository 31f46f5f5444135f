#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hybrid/corpus.hpp"
#include "hybrid/dense.hpp"
#include "hybrid/judge.hpp"
#include "hybrid/scored_list.hpp"
#include "hybrid/sparse.hpp"

namespace hybrid {

/// Fusion weight on the 0.1 grid, stored as an integer count of tenths so
/// grid membership and equality are exact.
class AlphaValue {
 public:
  constexpr AlphaValue() = default;

  /// Throws ContractViolation outside 0..10.
  static AlphaValue from_tenths(int tenths);
  /// Throws ContractViolation unless `value` lies on the grid (within 1e-9).
  static AlphaValue from_real(double value);
  static std::array<AlphaValue, 11> grid();

  constexpr int tenths() const noexcept { return tenths_; }
  constexpr double value() const noexcept { return tenths_ / 10.0; }
  /// "0.0" .. "1.0"
  std::string str() const;

  constexpr auto operator<=>(const AlphaValue&) const = default;

 private:
  constexpr explicit AlphaValue(int tenths) : tenths_(tenths) {}
  int tenths_ = 0;
};

enum class ScoreSource { dense, bm25 };

std::string_view to_string(ScoreSource source);

/// Min-max scaled scores of one list, in the order of the source list.
class NormalizedList {
 public:
  NormalizedList(ScoreSource source, std::vector<ScoredEntry> entries);

  ScoreSource source() const noexcept { return source_; }
  const std::vector<ScoredEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::optional<double> score_of(std::string_view id) const;

 private:
  ScoreSource source_;
  std::vector<ScoredEntry> entries_;
  std::unordered_map<std::string_view, double> by_id_;
};

/// (s - min) / (max - min) over the list's own entries. When every score is
/// equal (including a single entry) each entry becomes 0.5.
NormalizedList min_max_normalize(const ScoredList& scored, ScoreSource source);

/// (0,0) -> 0.5; a lone 5 wins outright; otherwise s_v / (s_v + s_b) rounded
/// half away from zero to one decimal.
AlphaValue compute_alpha(EffectivenessScore s_v, EffectivenessScore s_b);

/// alpha * dense + (1 - alpha) * bm25 over the union of both lists after
/// normalizing each; an id missing from one list scores 0 on that side.
/// Returns the best `k`. Throws ConfigError when k is 0.
ScoredList fuse(const ScoredList& dense, const ScoredList& bm25, AlphaValue alpha, std::size_t k);

struct HybridResult {
  ScoredList ranking;
  AlphaValue alpha_used;
  std::optional<JudgeVerdict> verdict;
  std::optional<std::string> dense_top1;
  std::optional<std::string> bm25_top1;
};

/// Per-method candidate pools for one query.
struct Pools {
  ScoredList dense;
  ScoredList bm25;
};

/// Both indexes over one corpus plus the provider used to embed queries.
class Retriever {
 public:
  /// Throws ContractViolation unless the dense index covers the corpus and
  /// matches the provider's model and dimension.
  Retriever(const Corpus& corpus, const InvertedIndex& sparse, const DenseIndex& dense,
            EmbeddingProvider& embedder);

  EmbeddingVector embed_query(std::string_view query_text) const;
  /// One provider call per `batch_size` texts.
  std::vector<EmbeddingVector> embed_queries(std::span<const std::string> texts,
                                             std::size_t batch_size = 64) const;

  Pools retrieve(std::string_view query_text, std::size_t pool_n) const;
  Pools retrieve(std::string_view query_text, const EmbeddingVector& query_vector,
                 std::size_t pool_n) const;

  const Corpus& corpus() const noexcept { return corpus_; }
  const InvertedIndex& sparse() const noexcept { return sparse_; }
  const DenseIndex& dense() const noexcept { return dense_; }

 private:
  const Corpus& corpus_;
  const InvertedIndex& sparse_;
  const DenseIndex& dense_;
  EmbeddingProvider& embedder_;
};

HybridResult fuse_fixed(const Pools& pools, AlphaValue alpha, std::size_t k);

/// Judges the two top-1 texts and fuses at the resulting alpha. An empty
/// BM25 pool gives alpha 1.0 and an empty dense pool 0.0, with no judge call.
HybridResult fuse_dat(const Corpus& corpus, std::string_view query_text, const Pools& pools,
                      Judge& judge, std::size_t k,
                      std::optional<std::string_view> gold_text = std::nullopt);

/// Throws ConfigError unless 1 <= k <= pool_n.
HybridResult hybrid_search_fixed(const Retriever& retriever, std::string_view query_text,
                                 AlphaValue alpha, std::size_t k, std::size_t pool_n);
HybridResult hybrid_search_dat(const Retriever& retriever, std::string_view query_text,
                               Judge& judge, std::size_t k, std::size_t pool_n,
                               std::optional<std::string_view> gold_text = std::nullopt);

}  // namespace hybrid
