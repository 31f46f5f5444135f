#include "hybrid/dense.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "hybrid/error.hpp"
#include "hybrid/kernels.hpp"

namespace hybrid {

static_assert(std::endian::native == std::endian::little, "vector store layout is little-endian");

DenseIndex::DenseIndex(std::string model_id, std::size_t dim)
    : model_id_(std::move(model_id)), dim_(dim) {
  if (dim_ == 0) throw ConfigError("dense index dim must be at least 1");
}

void DenseIndex::add(std::string id, const EmbeddingVector& vector) {
  if (vector.dim() != dim_) {
    throw DimensionMismatch("vector for '" + id + "' has dim " + std::to_string(vector.dim()) +
                            ", index has " + std::to_string(dim_));
  }
  if (!row_of_.emplace(id, ids_.size()).second) {
    throw DuplicateIdError("paragraph '" + id + "' already has a vector");
  }
  ids_.push_back(std::move(id));
  rows_.insert(rows_.end(), vector.values().begin(), vector.values().end());
  norms_.push_back(vector.norm());
}

DenseIndex DenseIndex::build(const Corpus& corpus, EmbeddingProvider& provider,
                             std::size_t batch_size) {
  if (corpus.empty()) throw EmptyCorpusError("cannot build a dense index over an empty corpus");
  batch_size = std::max<std::size_t>(1, batch_size);
  DenseIndex index(provider.model_id(), provider.dim());
  const auto& paragraphs = corpus.paragraphs();
  for (std::size_t start = 0; start < paragraphs.size(); start += batch_size) {
    const std::size_t end = std::min(paragraphs.size(), start + batch_size);
    std::vector<std::string> texts;
    for (std::size_t i = start; i < end; ++i) texts.push_back(paragraphs[i].text);
    std::vector<EmbeddingVector> vectors;
    try {
      vectors = provider.embed(texts);
    } catch (const ProviderError& e) {
      throw ProviderError(std::string(e.what()) + " while embedding paragraph '" +
                              paragraphs[start].id + "'",
                          e.status(), e.retries());
    } catch (const ContractViolation& e) {
      throw ContractViolation(std::string(e.what()) + " while embedding paragraph '" +
                              paragraphs[start].id + "'");
    }
    if (vectors.size() != texts.size()) {
      throw ContractViolation("provider returned " + std::to_string(vectors.size()) +
                              " vectors for " + std::to_string(texts.size()) + " paragraphs");
    }
    for (std::size_t i = start; i < end; ++i) index.add(paragraphs[i].id, vectors[i - start]);
  }
  return index;
}

ScoredList DenseIndex::search(const EmbeddingVector& query, std::size_t k) const {
  if (k == 0) throw ConfigError("search depth k must be at least 1");
  if (query.dim() != dim_) {
    throw DimensionMismatch("query has dim " + std::to_string(query.dim()) + ", index has " +
                            std::to_string(dim_));
  }
  std::vector<double> dots(ids_.size());
  kernels::active().dot_rows(rows_.data(), ids_.size(), dim_, query.data(), dots.data());
  std::vector<ScoredEntry> entries;
  entries.reserve(ids_.size());
  for (std::size_t r = 0; r < ids_.size(); ++r) {
    entries.push_back({ids_[r], std::clamp(dots[r] / (norms_[r] * query.norm()), -1.0, 1.0)});
  }
  return ScoredList::from_unsorted(std::move(entries), k);
}

EmbeddingVector DenseIndex::vector(std::string_view id) const {
  const auto it = row_of_.find(std::string(id));
  if (it == row_of_.end()) throw NotFoundError("no vector for paragraph '" + std::string(id) + "'");
  const auto begin = rows_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_);
  return EmbeddingVector(std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(dim_)));
}

void DenseIndex::require_covers(const Corpus& corpus) const {
  for (const auto& p : corpus.paragraphs()) {
    if (!row_of_.contains(p.id)) {
      throw ContractViolation("dense index has no vector for paragraph '" + p.id + "'");
    }
  }
}

namespace {

constexpr char kMagic[8] = {'H', 'Y', 'B', 'V', 'E', 'C', '0', '1'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof value);
  if (!in) throw ParseError("truncated vector store");
  return value;
}

std::string get_string(std::istream& in, std::uint32_t length) {
  std::string s(length, '\0');
  in.read(s.data(), length);
  if (!in) throw ParseError("truncated vector store");
  return s;
}

}  // namespace

void DenseIndex::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vector store " + path.string());
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dim_));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model_id_.size()));
  out.write(model_id_.data(), static_cast<std::streamsize>(model_id_.size()));
  put<std::uint64_t>(out, ids_.size());
  for (std::size_t r = 0; r < ids_.size(); ++r) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ids_[r].size()));
    out.write(ids_[r].data(), static_cast<std::streamsize>(ids_[r].size()));
    out.write(reinterpret_cast<const char*>(rows_.data() + r * dim_),
              static_cast<std::streamsize>(dim_ * sizeof(double)));
  }
  if (!out) throw IoError("failed writing vector store " + path.string());
}

DenseIndex DenseIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vector store " + path.string());
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw ParseError(path.string() + ": not a vector store");
  }
  if (get<std::uint32_t>(in) != 1) throw ParseError(path.string() + ": unsupported version");
  const auto dim = get<std::uint32_t>(in);
  const auto model_id = get_string(in, get<std::uint32_t>(in));
  const auto count = get<std::uint64_t>(in);
  DenseIndex index(model_id, dim);
  std::vector<double> row(dim);
  for (std::uint64_t r = 0; r < count; ++r) {
    auto id = get_string(in, get<std::uint32_t>(in));
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(dim * sizeof(double)));
    if (!in) throw ParseError(path.string() + ": truncated vector store");
    index.add(std::move(id), EmbeddingVector(row));
  }
  return index;
}

DenseIndex build_dense_index(const Corpus& corpus, EmbeddingProvider& provider,
                             std::size_t batch_size) {
  return DenseIndex::build(corpus, provider, batch_size);
}

ScoredList search_dense(const DenseIndex& index, const EmbeddingVector& query, std::size_t k) {
  return index.search(query, k);
}

}  // namespace hybrid
