#include "hybrid/scored_list.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "hybrid/error.hpp"

namespace hybrid {

ScoredList ScoredList::from_unsorted(std::vector<ScoredEntry> entries,
                                     std::optional<std::size_t> k) {
  std::unordered_set<std::string_view> seen;
  seen.reserve(entries.size());
  for (const auto& e : entries) {
    if (std::isnan(e.score)) throw ContractViolation("NaN score for id '" + e.id + "'");
    if (!seen.insert(e.id).second) throw ContractViolation("duplicate id '" + e.id + "' in ranking");
  }
  const std::size_t keep = std::min(entries.size(), k.value_or(entries.size()));
  std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(keep),
                    entries.end(), ranks_before);
  entries.resize(keep);

  ScoredList out;
  out.entries_ = std::move(entries);
  return out;
}

std::optional<std::size_t> ScoredList::rank_of(std::string_view id) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].id == id) return i + 1;
  }
  return std::nullopt;
}

std::optional<double> ScoredList::score_of(std::string_view id) const {
  for (const auto& e : entries_) {
    if (e.id == id) return e.score;
  }
  return std::nullopt;
}

std::vector<std::string> ScoredList::ids() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.id);
  return out;
}

}  // namespace hybrid
