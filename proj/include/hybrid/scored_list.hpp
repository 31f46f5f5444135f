#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hybrid {

struct ScoredEntry {
  std::string id;
  double score = 0.0;

  bool operator==(const ScoredEntry&) const = default;
};

/// Strict ranking order: higher score first, ties by ascending id.
inline bool ranks_before(const ScoredEntry& a, const ScoredEntry& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

/// Ranked (id, score) list. Ids are unique and entries are always in
/// ranks_before order.
class ScoredList {
 public:
  ScoredList() = default;

  /// Sorts, optionally truncates to the best `k`. Throws ContractViolation on
  /// duplicate ids or NaN scores.
  static ScoredList from_unsorted(std::vector<ScoredEntry> entries,
                                  std::optional<std::size_t> k = std::nullopt);

  std::span<const ScoredEntry> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const ScoredEntry& operator[](std::size_t i) const { return entries_[i]; }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  const ScoredEntry* top() const noexcept { return entries_.empty() ? nullptr : &entries_.front(); }

  /// 1-based position of `id`.
  std::optional<std::size_t> rank_of(std::string_view id) const;
  std::optional<double> score_of(std::string_view id) const;

  std::vector<std::string> ids() const;

  bool operator==(const ScoredList&) const = default;

 private:
  std::vector<ScoredEntry> entries_;
};

}  // namespace hybrid
