#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hybrid {

enum class Language { english, cjk, other };

std::string_view to_string(Language language);
Language parse_language(std::string_view name);

struct Paragraph {
  std::string id;
  std::string article_id;
  std::string text;

  bool operator==(const Paragraph&) const = default;
};

struct QueryRecord {
  std::string id;
  std::string text;
  std::string gold_paragraph_id;

  bool operator==(const QueryRecord&) const = default;
};

/// Immutable paragraph collection plus the queries grounded in it.
///
/// Paragraph ids are unique, texts non-empty, and every query's gold
/// paragraph is present. The constructor enforces all three.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<Paragraph> paragraphs, std::vector<QueryRecord> queries,
         Language language = Language::english);

  const std::vector<Paragraph>& paragraphs() const noexcept { return paragraphs_; }
  const std::vector<QueryRecord>& queries() const noexcept { return queries_; }
  Language language() const noexcept { return language_; }

  const Paragraph* find(std::string_view id) const;
  /// Throws NotFoundError.
  const Paragraph& paragraph(std::string_view id) const;

  /// Article ids in order of first appearance.
  std::vector<std::string> article_ids() const;

  bool empty() const noexcept { return paragraphs_.empty(); }

  bool operator==(const Corpus& other) const;

 private:
  std::vector<Paragraph> paragraphs_;
  std::vector<QueryRecord> queries_;
  Language language_ = Language::english;
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// Reads the nested data -> paragraphs -> qas layout. Answer spans are
/// ignored. When `language` is unset it is inferred from the contexts.
Corpus load_squad_format(const std::filesystem::path& path,
                         std::optional<Language> language = std::nullopt);
Corpus parse_squad_format(std::string_view document, std::string_view origin = "<memory>",
                          std::optional<Language> language = std::nullopt);

/// Admits whole articles in a seeded random order until the next one would
/// push the question count past `max_questions`.
Corpus sample_corpus(const Corpus& corpus, std::size_t max_questions, std::uint64_t seed);

/// Article draw order used by sample_corpus; exposed for inspection.
std::vector<std::string> article_permutation(const Corpus& corpus, std::uint64_t seed);

void write_corpus(const Corpus& corpus, std::ostream& out);
Corpus read_corpus(std::istream& in, std::string_view origin = "<stream>");
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

Language detect_language(const std::vector<Paragraph>& paragraphs);

}  // namespace hybrid
