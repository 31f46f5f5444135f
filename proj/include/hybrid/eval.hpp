#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hybrid/fusion.hpp"

namespace hybrid {

/// 1-based rank; nullopt when the gold paragraph is absent, which orders
/// after every finite rank.
using Rank = std::optional<std::size_t>;

/// Gold rank at each grid alpha, indexed by tenths.
using GridRanks = std::array<Rank, 11>;

struct QueryEvalRecord {
  std::string query_id;
  std::string gold_id;
  GridRanks gold_rank_by_alpha{};
  AlphaValue chosen_alpha;
  Rank chosen_rank;  // == gold_rank_by_alpha[chosen_alpha]
  std::optional<JudgeVerdict> verdict;
  std::optional<std::string> dense_top1;
  std::optional<std::string> bm25_top1;

  bool operator==(const QueryEvalRecord&) const = default;
};

struct EvalReport {
  std::string method_label;
  double precision_at_1 = 0.0;
  double mrr_at_20 = 0.0;
  double alpha_selection_accuracy = 0.0;
  std::size_t n_queries = 0;
  std::size_t n_fallback_verdicts = 0;
  std::size_t pool_n = 0;
  std::vector<QueryEvalRecord> records;  // sorted by query_id

  bool operator==(const EvalReport&) const = default;
};

Rank rank_of_gold(const ScoredList& ranking, std::string_view gold_id);

/// Mean of 1/rank with ranks past 20 and absent ranks contributing 0.
/// Throws ContractViolation on an empty input.
double mrr_at_20(std::span<const Rank> ranks);
double mrr_at_20(std::span<const QueryEvalRecord> records);
double precision_at_1(std::span<const Rank> ranks);
double precision_at_1(std::span<const QueryEvalRecord> records);

/// Gold rank at every grid alpha, fusing the same pools with k = pool_n.
GridRanks alpha_grid_ranks(const Pools& pools, std::string_view gold_id, std::size_t pool_n);
GridRanks alpha_grid_ranks(const Retriever& retriever, const QueryRecord& query,
                           std::size_t pool_n);

/// Alphas achieving the best gold rank; the whole grid when no alpha
/// retrieves the gold paragraph at all. Ascending order.
std::vector<AlphaValue> optimal_alpha_set(const GridRanks& ranks);

double alpha_selection_accuracy(std::span<const QueryEvalRecord> records);

/// Queries where some grid alpha ranks gold first and another does not.
std::set<std::string> hybrid_sensitive_subset(std::span<const QueryEvalRecord> records);

struct GridSearchResult {
  AlphaValue best;
  std::array<double, 11> precision_at_1{};  // indexed by tenths
};

/// Alpha with the highest Precision@1; ties go to the smallest alpha.
/// Throws ContractViolation on an empty input.
GridSearchResult grid_search_alpha(std::span<const GridRanks> grids);
GridSearchResult grid_search_alpha(const Retriever& retriever, std::span<const QueryRecord> queries,
                                   std::size_t pool_n, std::size_t parallelism = 1);

enum class MethodKind { bm25_only, dense_only, fixed, dat };

struct EvalMethod {
  MethodKind kind = MethodKind::fixed;
  AlphaValue alpha = AlphaValue::from_tenths(6);  // fixed only
  Judge* judge = nullptr;                          // dat only, not owned

  static EvalMethod bm25_only();
  static EvalMethod dense_only();
  static EvalMethod fixed(AlphaValue alpha);
  static EvalMethod dat(Judge& judge);

  /// "bm25_only", "dense_only", "fixed(0.6)", "dat(<judge kind>)"
  std::string label() const;
};

struct EvalOptions {
  std::size_t pool_n = 100;
  std::size_t k = 20;
  std::size_t parallelism = 1;
  std::size_t embed_batch_size = 64;
  /// When set, only these query ids are evaluated.
  std::optional<std::set<std::string>> subset;
};

/// Throws ConfigError unless 20 <= k <= pool_n (MRR@20 needs 20 results).
void validate(const EvalOptions& options);

/// Records carry the full alpha grid for each query. Oracle judges receive
/// the gold paragraph text.
EvalReport run_eval(const EvalMethod& method, const Retriever& retriever,
                    const EvalOptions& options);

/// Drops records outside `ids` and recomputes the aggregates.
EvalReport restrict_report(const EvalReport& report, const std::set<std::string>& ids);

/// Recomputes aggregates from records; throws ContractViolation when any
/// differs from the stored value by more than 1e-12.
void check_consistency(const EvalReport& report);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(std::string_view text);

/// One row per report: method, P@1, MRR@20, alpha accuracy, query count.
std::string report_table(std::span<const EvalReport> reports, std::string_view title = {});

}  // namespace hybrid
