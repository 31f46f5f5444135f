#include "hybrid/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "hybrid/error.hpp"

namespace hybrid {

AlphaValue AlphaValue::from_tenths(int tenths) {
  if (tenths < 0 || tenths > 10) {
    throw ContractViolation("alpha tenths " + std::to_string(tenths) + " outside 0..10");
  }
  return AlphaValue(tenths);
}

AlphaValue AlphaValue::from_real(double value) {
  const double scaled = value * 10.0;
  const double nearest = std::round(scaled);
  if (!std::isfinite(value) || std::abs(scaled - nearest) > 1e-8 || nearest < 0 || nearest > 10) {
    throw ContractViolation("alpha " + std::to_string(value) + " is not on the 0.1 grid in [0, 1]");
  }
  return AlphaValue(static_cast<int>(nearest));
}

std::array<AlphaValue, 11> AlphaValue::grid() {
  std::array<AlphaValue, 11> g;
  for (int t = 0; t <= 10; ++t) g[static_cast<std::size_t>(t)] = AlphaValue(t);
  return g;
}

std::string AlphaValue::str() const {
  return std::to_string(tenths_ / 10) + "." + std::to_string(tenths_ % 10);
}

std::string_view to_string(ScoreSource source) {
  return source == ScoreSource::dense ? "dense" : "bm25";
}

NormalizedList::NormalizedList(ScoreSource source, std::vector<ScoredEntry> entries)
    : source_(source), entries_(std::move(entries)) {
  by_id_.reserve(entries_.size());
  for (const auto& e : entries_) {
    if (!(e.score >= 0.0 && e.score <= 1.0)) {
      throw ContractViolation("normalized score for '" + e.id + "' outside [0, 1]");
    }
    if (!by_id_.emplace(e.id, e.score).second) {
      throw ContractViolation("duplicate id '" + e.id + "' in normalized list");
    }
  }
}

std::optional<double> NormalizedList::score_of(std::string_view id) const {
  const auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

NormalizedList min_max_normalize(const ScoredList& scored, ScoreSource source) {
  std::vector<ScoredEntry> out;
  out.reserve(scored.size());
  if (scored.empty()) return NormalizedList(source, std::move(out));
  const auto [lo, hi] = std::minmax_element(
      scored.begin(), scored.end(),
      [](const ScoredEntry& a, const ScoredEntry& b) { return a.score < b.score; });
  const double min = lo->score;
  const double max = hi->score;
  for (const auto& e : scored) {
    const double s = max == min ? 0.5 : (e.score - min) / (max - min);
    out.push_back({e.id, std::clamp(s, 0.0, 1.0)});
  }
  return NormalizedList(source, std::move(out));
}

AlphaValue compute_alpha(EffectivenessScore s_v, EffectivenessScore s_b) {
  const int v = s_v.value();
  const int b = s_b.value();
  if (v == 0 && b == 0) return AlphaValue::from_tenths(5);
  if (v == 5 && b != 5) return AlphaValue::from_tenths(10);
  if (b == 5 && v != 5) return AlphaValue::from_tenths(0);
  // Half away from zero on 10v/n, all terms non-negative integers.
  const int n = v + b;
  return AlphaValue::from_tenths((20 * v + n) / (2 * n));
}

ScoredList fuse(const ScoredList& dense, const ScoredList& bm25, AlphaValue alpha, std::size_t k) {
  if (k == 0) throw ConfigError("fusion depth k must be at least 1");
  const auto nd = min_max_normalize(dense, ScoreSource::dense);
  const auto nb = min_max_normalize(bm25, ScoreSource::bm25);
  const double wd = alpha.tenths();
  const double wb = 10 - alpha.tenths();

  std::vector<ScoredEntry> fused;
  fused.reserve(nd.size() + nb.size());
  std::unordered_set<std::string_view> seen;
  for (const auto& e : nd.entries()) {
    const double b = nb.score_of(e.id).value_or(0.0);
    fused.push_back({e.id, (wd * e.score + wb * b) / 10.0});
    seen.insert(e.id);
  }
  for (const auto& e : nb.entries()) {
    if (seen.contains(e.id)) continue;
    fused.push_back({e.id, wb * e.score / 10.0});
  }
  return ScoredList::from_unsorted(std::move(fused), k);
}

// ---------------------------------------------------------------------------

Retriever::Retriever(const Corpus& corpus, const InvertedIndex& sparse, const DenseIndex& dense,
                     EmbeddingProvider& embedder)
    : corpus_(corpus), sparse_(sparse), dense_(dense), embedder_(embedder) {
  if (dense_.dim() != embedder_.dim()) {
    throw ContractViolation("dense index dim " + std::to_string(dense_.dim()) +
                            " differs from embedder dim " + std::to_string(embedder_.dim()));
  }
  if (dense_.model_id() != embedder_.model_id()) {
    throw ContractViolation("dense index was built with '" + dense_.model_id() +
                            "' but queries use '" + embedder_.model_id() + "'");
  }
  if (sparse_.doc_count() != corpus_.paragraphs().size()) {
    throw ContractViolation("sparse index does not match the corpus");
  }
  dense_.require_covers(corpus_);
}

EmbeddingVector Retriever::embed_query(std::string_view query_text) const {
  const std::string text(query_text);
  auto vectors = embedder_.embed(std::span<const std::string>(&text, 1));
  if (vectors.size() != 1) throw ContractViolation("embedder returned no query vector");
  return std::move(vectors.front());
}

std::vector<EmbeddingVector> Retriever::embed_queries(std::span<const std::string> texts,
                                                      std::size_t batch_size) const {
  batch_size = std::max<std::size_t>(1, batch_size);
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += batch_size) {
    const auto batch = texts.subspan(start, std::min(batch_size, texts.size() - start));
    auto vectors = embedder_.embed(batch);
    if (vectors.size() != batch.size()) {
      throw ContractViolation("embedder returned " + std::to_string(vectors.size()) +
                              " vectors for " + std::to_string(batch.size()) + " queries");
    }
    for (auto& v : vectors) out.push_back(std::move(v));
  }
  return out;
}

Pools Retriever::retrieve(std::string_view query_text, std::size_t pool_n) const {
  return retrieve(query_text, embed_query(query_text), pool_n);
}

Pools Retriever::retrieve(std::string_view query_text, const EmbeddingVector& query_vector,
                          std::size_t pool_n) const {
  return {dense_.search(query_vector, pool_n), sparse_.search(query_text, pool_n)};
}

namespace {

void require_depths(std::size_t k, std::size_t pool_n) {
  if (k == 0) throw ConfigError("k must be at least 1");
  if (pool_n < k) {
    throw ConfigError("pool_n " + std::to_string(pool_n) + " is smaller than k " +
                      std::to_string(k));
  }
}

void fill_tops(HybridResult& r, const Pools& pools) {
  if (const auto* t = pools.dense.top()) r.dense_top1 = t->id;
  if (const auto* t = pools.bm25.top()) r.bm25_top1 = t->id;
}

}  // namespace

HybridResult fuse_fixed(const Pools& pools, AlphaValue alpha, std::size_t k) {
  HybridResult r;
  r.alpha_used = alpha;
  fill_tops(r, pools);
  r.ranking = fuse(pools.dense, pools.bm25, alpha, k);
  return r;
}

HybridResult fuse_dat(const Corpus& corpus, std::string_view query_text, const Pools& pools,
                      Judge& judge, std::size_t k, std::optional<std::string_view> gold_text) {
  HybridResult r;
  fill_tops(r, pools);
  if (pools.dense.empty() && pools.bm25.empty()) {
    r.alpha_used = AlphaValue::from_tenths(5);
    return r;
  }
  if (pools.bm25.empty()) {
    r.alpha_used = AlphaValue::from_tenths(10);
  } else if (pools.dense.empty()) {
    r.alpha_used = AlphaValue::from_tenths(0);
  } else {
    const auto& dense_text = corpus.paragraph(*r.dense_top1).text;
    const auto& bm25_text = corpus.paragraph(*r.bm25_top1).text;
    r.verdict = judge.evaluate({query_text, dense_text, bm25_text, gold_text});
    r.alpha_used = compute_alpha(r.verdict->s_dense, r.verdict->s_bm25);
  }
  r.ranking = fuse(pools.dense, pools.bm25, r.alpha_used, k);
  return r;
}

HybridResult hybrid_search_fixed(const Retriever& retriever, std::string_view query_text,
                                 AlphaValue alpha, std::size_t k, std::size_t pool_n) {
  require_depths(k, pool_n);
  return fuse_fixed(retriever.retrieve(query_text, pool_n), alpha, k);
}

HybridResult hybrid_search_dat(const Retriever& retriever, std::string_view query_text,
                               Judge& judge, std::size_t k, std::size_t pool_n,
                               std::optional<std::string_view> gold_text) {
  require_depths(k, pool_n);
  return fuse_dat(retriever.corpus(), query_text, retriever.retrieve(query_text, pool_n), judge, k,
                  gold_text);
}

}  // namespace hybrid
