#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hybrid/corpus.hpp"
#include "hybrid/embedding.hpp"
#include "hybrid/scored_list.hpp"

namespace hybrid {

/// Exhaustive cosine-similarity index. Rows live in one row-major buffer
/// with their norms precomputed; a search is a single pass through the
/// active dot_rows kernel.
class DenseIndex {
 public:
  DenseIndex(std::string model_id, std::size_t dim);

  /// Throws DimensionMismatch or DuplicateIdError.
  void add(std::string id, const EmbeddingVector& vector);

  /// Embeds every paragraph in batches of `batch_size`. Provider errors are
  /// rethrown naming the failing paragraph.
  static DenseIndex build(const Corpus& corpus, EmbeddingProvider& provider,
                          std::size_t batch_size = 64);

  /// Top-k over all rows, ScoredList ordering. Throws DimensionMismatch.
  ScoredList search(const EmbeddingVector& query, std::size_t k) const;

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::string& model_id() const noexcept { return model_id_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  EmbeddingVector vector(std::string_view id) const;

  /// Throws ContractViolation unless every paragraph of `corpus` has a row.
  void require_covers(const Corpus& corpus) const;

  /// Little-endian binary layout, see docs/formats.md.
  void save(const std::filesystem::path& path) const;
  static DenseIndex load(const std::filesystem::path& path);

  bool operator==(const DenseIndex& other) const {
    return model_id_ == other.model_id_ && dim_ == other.dim_ && ids_ == other.ids_ &&
           rows_ == other.rows_;
  }

 private:
  std::string model_id_;
  std::size_t dim_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> row_of_;
  std::vector<double> rows_;
  std::vector<double> norms_;
};

DenseIndex build_dense_index(const Corpus& corpus, EmbeddingProvider& provider,
                             std::size_t batch_size = 64);
ScoredList search_dense(const DenseIndex& index, const EmbeddingVector& query, std::size_t k);

}  // namespace hybrid
