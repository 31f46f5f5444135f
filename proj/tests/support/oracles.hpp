#pragma once

// Independent re-statements of the scoring formulas, written directly from
// their definitions and deliberately sharing no code with the library.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace hybrid::oracle {

using Ranked = std::vector<std::pair<std::string, double>>;

inline void sort_ranked(Ranked& r) {
  std::sort(r.begin(), r.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
}

/// Docs are pre-tokenized; every doc sharing a token with the query is a
/// candidate. Query tokens count with multiplicity. Terms are summed in
/// extended precision so that mathematically tied documents tie exactly.
inline Ranked bm25(const std::map<std::string, std::vector<std::string>>& docs,
                   const std::vector<std::string>& query, double k1 = 1.2, double b = 0.75) {
  const double n = static_cast<double>(docs.size());
  double total = 0;
  for (const auto& [id, toks] : docs) total += static_cast<double>(toks.size());
  const double avgdl = total / n;
  Ranked out;
  for (const auto& [id, toks] : docs) {
    long double score = 0;
    bool overlap = false;
    for (const auto& q : query) {
      double f = 0;
      for (const auto& t : toks) f += (t == q);
      if (f == 0) continue;
      overlap = true;
      double df = 0;
      for (const auto& [_, other] : docs) df += std::count(other.begin(), other.end(), q) > 0;
      const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
      const double len = static_cast<double>(toks.size());
      score += idf * f * (k1 + 1) / (f + k1 * (1 - b + b * len / avgdl));
    }
    if (overlap) out.emplace_back(id, static_cast<double>(score));
  }
  // Scores equal up to rounding are ties, which the id decides.
  sort_ranked(out);
  for (std::size_t i = 0; i < out.size();) {
    std::size_t j = i + 1;
    while (j < out.size() && out[j - 1].second - out[j].second <= 1e-12 * std::abs(out[i].second)) ++j;
    std::sort(out.begin() + static_cast<long>(i), out.begin() + static_cast<long>(j),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    i = j;
  }
  return out;
}

inline std::map<std::string, double> normalize(const Ranked& scores) {
  std::map<std::string, double> out;
  if (scores.empty()) return out;
  double lo = scores[0].second, hi = scores[0].second;
  for (const auto& [_, s] : scores) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  for (const auto& [id, s] : scores) out[id] = hi == lo ? 0.5 : (s - lo) / (hi - lo);
  return out;
}

inline Ranked fuse(const Ranked& dense, const Ranked& bm25, double alpha) {
  const auto nd = normalize(dense);
  const auto nb = normalize(bm25);
  std::set<std::string> ids;
  for (const auto& [id, _] : nd) ids.insert(id);
  for (const auto& [id, _] : nb) ids.insert(id);
  Ranked out;
  for (const auto& id : ids) {
    const double d = nd.count(id) ? nd.at(id) : 0.0;
    const double s = nb.count(id) ? nb.at(id) : 0.0;
    out.emplace_back(id, alpha * d + (1 - alpha) * s);
  }
  sort_ranked(out);
  return out;
}

using Rank = std::optional<std::size_t>;

inline double mrr_at_20(const std::vector<Rank>& ranks) {
  double sum = 0;
  for (const auto& r : ranks) {
    if (r.has_value() && r.value() <= 20) sum += 1.0 / static_cast<double>(r.value());
  }
  return sum / static_cast<double>(ranks.size());
}

inline double precision_at_1(const std::vector<Rank>& ranks) {
  double hits = 0;
  for (const auto& r : ranks) hits += r.has_value() && r.value() == 1;
  return hits / static_cast<double>(ranks.size());
}

/// Indices (tenths) attaining the smallest rank, absent = worst.
inline std::set<int> optimal_tenths(const std::vector<Rank>& grid) {
  const std::size_t inf = static_cast<std::size_t>(-1);
  std::size_t best = inf;
  for (const auto& r : grid) best = std::min(best, r.value_or(inf));
  std::set<int> out;
  for (int t = 0; t < static_cast<int>(grid.size()); ++t) {
    if (grid[static_cast<std::size_t>(t)].value_or(inf) == best) out.insert(t);
  }
  return out;
}

inline bool hybrid_sensitive(const std::vector<Rank>& grid) {
  bool first = false, other = false;
  for (const auto& r : grid) {
    if (r == std::optional<std::size_t>(1)) {
      first = true;
    } else {
      other = true;
    }
  }
  return first && other;
}

}  // namespace hybrid::oracle
