#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hybrid/corpus.hpp"
#include "hybrid/scored_list.hpp"
#include "hybrid/tokenizer.hpp"

namespace hybrid {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  /// Throws ConfigError unless k1 >= 0 and 0 <= b <= 1.
  void validate() const;

  bool operator==(const Bm25Params&) const = default;
};

struct Posting {
  std::uint32_t doc = 0;  // position in the index's document table
  std::uint32_t tf = 0;

  bool operator==(const Posting&) const = default;
};

/// Okapi BM25 over a paragraph corpus.
///
/// IDF is ln(1 + (N - df + 0.5) / (df + 0.5)), which stays positive for every
/// df so that scores are non-negative. A document is a search candidate only
/// if it shares at least one token with the query.
class InvertedIndex {
 public:
  /// Throws EmptyCorpusError when the corpus has no paragraphs.
  static InvertedIndex build(const Corpus& corpus, Tokenizer tokenizer, Bm25Params params = {});

  double idf(std::string_view term) const;

  /// Sum over query tokens, repeated tokens counted each time. Throws
  /// NotFoundError for an unknown paragraph.
  double score(std::span<const std::string> query_tokens, std::string_view paragraph_id) const;

  ScoredList search(std::string_view query_text, std::size_t k) const;
  ScoredList search_tokens(std::span<const std::string> query_tokens, std::size_t k) const;

  std::size_t doc_count() const noexcept { return doc_ids_.size(); }
  double avgdl() const noexcept { return avgdl_; }
  std::size_t doc_freq(std::string_view term) const;
  std::uint32_t doc_length(std::string_view paragraph_id) const;
  std::span<const Posting> postings(std::string_view term) const;
  std::size_t term_count() const noexcept { return postings_.size(); }
  const std::string& doc_id(std::uint32_t doc) const { return doc_ids_.at(doc); }
  std::span<const std::string> doc_ids() const noexcept { return doc_ids_; }
  std::vector<std::string> terms() const;

  const Bm25Params& params() const noexcept { return params_; }
  const Tokenizer& tokenizer() const noexcept { return tokenizer_; }

  /// Line-delimited text layout, see docs/formats.md. Scores computed from a
  /// reloaded index are bit-identical.
  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  /// An index built with the external tokenizer needs the table supplied again.
  static InvertedIndex load(std::istream& in, std::optional<Tokenizer> external = std::nullopt);
  static InvertedIndex load(const std::filesystem::path& path,
                            std::optional<Tokenizer> external = std::nullopt);

  bool operator==(const InvertedIndex& other) const;

 private:
  InvertedIndex() = default;
  void finalize();
  double term_weight(double idf, std::uint32_t tf, std::uint32_t doc_len) const;
  const std::vector<Posting>* find_postings(std::string_view term) const;

  std::vector<std::string> doc_ids_;
  std::unordered_map<std::string, std::uint32_t> doc_index_;
  std::vector<std::uint32_t> doc_len_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::uint64_t total_len_ = 0;
  double avgdl_ = 0.0;
  Bm25Params params_;
  Tokenizer tokenizer_;
};

InvertedIndex build_index(const Corpus& corpus, const Tokenizer& tokenizer, Bm25Params params = {});
double idf(const InvertedIndex& index, std::string_view term);
double bm25_score(const InvertedIndex& index, std::span<const std::string> query_tokens,
                  std::string_view paragraph_id);
ScoredList search_bm25(const InvertedIndex& index, std::string_view query_text, std::size_t k);

}  // namespace hybrid
