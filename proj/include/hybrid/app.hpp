#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hybrid/embedding.hpp"
#include "hybrid/eval.hpp"
#include "hybrid/fusion.hpp"
#include "hybrid/http.hpp"
#include "hybrid/judge.hpp"
#include "hybrid/sparse.hpp"
#include "hybrid/tokenizer.hpp"

namespace hybrid::app {

/// Declarative settings for every command. Relative paths in the file are
/// resolved against the directory holding it.
struct AppConfig {
  std::filesystem::path source_path;  // SQuAD-format input of ingest
  std::optional<Language> source_language;
  std::filesystem::path corpus_path;  // native corpus written by ingest
  std::filesystem::path index_dir;
  std::filesystem::path out_dir = ".";
  EmbeddingProviderConfig embedding;
  JudgeConfig judge;
  Bm25Params bm25;
  TokenizerVariant tokenizer = TokenizerVariant::word_lower;
  std::filesystem::path tokenizer_table;  // external tokenizer only
  std::size_t pool_n = 100;
  std::size_t k = 20;
  AlphaValue fixed_alpha = AlphaValue::from_tenths(6);
  std::uint64_t seed = 0;
  std::size_t max_questions = 3000;
  std::size_t parallelism = 1;

  /// Throws ConfigError unless pool_n >= k >= 1 and every part validates.
  void validate() const;

  std::filesystem::path bm25_index_path() const { return index_dir / "bm25.index"; }
  std::filesystem::path dense_index_path() const { return index_dir / "dense.vec"; }
};

/// Throws ConfigError naming the offending key.
AppConfig parse_app_config(std::string_view json_text, const std::filesystem::path& base_dir);
AppConfig load_app_config(const std::filesystem::path& path);

/// Seams for the remote embedding provider and judge; null means the real
/// HTTP client.
struct Services {
  std::shared_ptr<HttpTransport> embedding_transport;
  std::shared_ptr<HttpTransport> judge_transport;
};

enum class SearchMode { bm25, dense, fixed, dat };
SearchMode parse_search_mode(std::string_view name);

enum class Subset { all, hybrid_sensitive };
Subset parse_subset(std::string_view name);

/// Every command reports to `out` and throws hybrid::Error on failure.
void cmd_ingest(const AppConfig& config, std::ostream& out);
void cmd_index(const AppConfig& config, std::ostream& out, const Services& services = {});
void cmd_search(const AppConfig& config, std::string_view query, SearchMode mode,
                std::ostream& out, const Services& services = {});

/// `methods` entries: bm25_only, dense_only, fixed, dat, all. Writes one JSON
/// report per method plus a text table into out_dir.
std::vector<EvalReport> cmd_eval(const AppConfig& config, const std::vector<std::string>& methods,
                                 Subset subset, std::ostream& out, const Services& services = {});
GridSearchResult cmd_grid_search(const AppConfig& config, std::ostream& out,
                                 const Services& services = {});

/// Runs the configured judge over every query and writes replay fixtures to
/// `fixture_path` (judge.replay_path when empty).
std::filesystem::path cmd_judge_dump(const AppConfig& config, std::ostream& out,
                                     const std::filesystem::path& fixture_path = {},
                                     const Services& services = {});

/// File-name form of a method label: "fixed(0.6)" -> "fixed_0.6".
std::string report_stem(std::string_view method_label);

}  // namespace hybrid::app
