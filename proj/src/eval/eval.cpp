#include "hybrid/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "hybrid/error.hpp"

namespace hybrid {

Rank rank_of_gold(const ScoredList& ranking, std::string_view gold_id) {
  return ranking.rank_of(gold_id);
}

namespace {

void require_nonempty(std::size_t n, const char* what) {
  if (n == 0) throw ContractViolation(std::string(what) + " of an empty query set");
}

std::vector<Rank> chosen_ranks(std::span<const QueryEvalRecord> records) {
  std::vector<Rank> ranks;
  ranks.reserve(records.size());
  for (const auto& r : records) ranks.push_back(r.chosen_rank);
  return ranks;
}

// Rank ordering with absent = +infinity.
bool better(const Rank& a, const Rank& b) {
  if (!a) return false;
  if (!b) return true;
  return *a < *b;
}

}  // namespace

double mrr_at_20(std::span<const Rank> ranks) {
  require_nonempty(ranks.size(), "MRR@20");
  double sum = 0.0;
  for (const auto& r : ranks) {
    if (r && *r >= 1 && *r <= 20) sum += 1.0 / static_cast<double>(*r);
  }
  return sum / static_cast<double>(ranks.size());
}

double mrr_at_20(std::span<const QueryEvalRecord> records) {
  return mrr_at_20(chosen_ranks(records));
}

double precision_at_1(std::span<const Rank> ranks) {
  require_nonempty(ranks.size(), "Precision@1");
  std::size_t hits = 0;
  for (const auto& r : ranks) hits += (r && *r == 1) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double precision_at_1(std::span<const QueryEvalRecord> records) {
  return precision_at_1(chosen_ranks(records));
}

GridRanks alpha_grid_ranks(const Pools& pools, std::string_view gold_id, std::size_t pool_n) {
  GridRanks ranks{};
  for (const auto alpha : AlphaValue::grid()) {
    ranks[static_cast<std::size_t>(alpha.tenths())] =
        rank_of_gold(fuse(pools.dense, pools.bm25, alpha, pool_n), gold_id);
  }
  return ranks;
}

GridRanks alpha_grid_ranks(const Retriever& retriever, const QueryRecord& query,
                           std::size_t pool_n) {
  return alpha_grid_ranks(retriever.retrieve(query.text, pool_n), query.gold_paragraph_id, pool_n);
}

std::vector<AlphaValue> optimal_alpha_set(const GridRanks& ranks) {
  Rank best;
  for (const auto& r : ranks) {
    if (better(r, best)) best = r;
  }
  std::vector<AlphaValue> out;
  for (const auto alpha : AlphaValue::grid()) {
    if (ranks[static_cast<std::size_t>(alpha.tenths())] == best) out.push_back(alpha);
  }
  return out;
}

double alpha_selection_accuracy(std::span<const QueryEvalRecord> records) {
  require_nonempty(records.size(), "alpha selection accuracy");
  std::size_t correct = 0;
  for (const auto& r : records) {
    const auto set = optimal_alpha_set(r.gold_rank_by_alpha);
    correct += std::binary_search(set.begin(), set.end(), r.chosen_alpha) ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

std::set<std::string> hybrid_sensitive_subset(std::span<const QueryEvalRecord> records) {
  std::set<std::string> out;
  for (const auto& r : records) {
    const auto& g = r.gold_rank_by_alpha;
    const bool some_first = std::any_of(g.begin(), g.end(), [](const Rank& x) { return x == 1u; });
    const bool some_not = std::any_of(g.begin(), g.end(), [](const Rank& x) { return x != 1u; });
    if (some_first && some_not) out.insert(r.query_id);
  }
  return out;
}

GridSearchResult grid_search_alpha(std::span<const GridRanks> grids) {
  require_nonempty(grids.size(), "grid search");
  GridSearchResult result;
  for (std::size_t t = 0; t <= 10; ++t) {
    std::size_t hits = 0;
    for (const auto& g : grids) hits += g[t] == 1u ? 1 : 0;
    result.precision_at_1[t] = static_cast<double>(hits) / static_cast<double>(grids.size());
  }
  std::size_t best = 0;
  for (std::size_t t = 1; t <= 10; ++t) {
    if (result.precision_at_1[t] > result.precision_at_1[best]) best = t;
  }
  result.best = AlphaValue::from_tenths(static_cast<int>(best));
  return result;
}

namespace {

// Runs fn(i) for i in [0, n) on up to `parallelism` threads. The exception of
// the lowest failing index is rethrown so failures are reproducible.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t parallelism, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(parallelism, 1, std::max<std::size_t>(1, n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<const QueryRecord*> select_queries(const Corpus& corpus, const EvalOptions& options) {
  std::vector<const QueryRecord*> out;
  for (const auto& q : corpus.queries()) {
    if (!options.subset || options.subset->contains(q.id)) out.push_back(&q);
  }
  std::sort(out.begin(), out.end(),
            [](const QueryRecord* a, const QueryRecord* b) { return a->id < b->id; });
  return out;
}

void fill_aggregates(EvalReport& report) {
  report.n_queries = report.records.size();
  report.n_fallback_verdicts = static_cast<std::size_t>(
      std::count_if(report.records.begin(), report.records.end(),
                    [](const QueryEvalRecord& r) { return r.verdict && r.verdict->is_fallback; }));
  if (report.records.empty()) {
    report.precision_at_1 = report.mrr_at_20 = report.alpha_selection_accuracy = 0.0;
    return;
  }
  report.precision_at_1 = precision_at_1(report.records);
  report.mrr_at_20 = mrr_at_20(report.records);
  report.alpha_selection_accuracy = alpha_selection_accuracy(report.records);
}

}  // namespace

GridSearchResult grid_search_alpha(const Retriever& retriever, std::span<const QueryRecord> queries,
                                   std::size_t pool_n, std::size_t parallelism) {
  std::vector<std::string> texts;
  for (const auto& q : queries) texts.push_back(q.text);
  const auto vectors = retriever.embed_queries(texts);
  std::vector<GridRanks> grids(queries.size());
  parallel_for(queries.size(), parallelism, [&](std::size_t i) {
    const auto pools = retriever.retrieve(queries[i].text, vectors[i], pool_n);
    grids[i] = alpha_grid_ranks(pools, queries[i].gold_paragraph_id, pool_n);
  });
  return grid_search_alpha(grids);
}

EvalMethod EvalMethod::bm25_only() { return {MethodKind::bm25_only, AlphaValue::from_tenths(0)}; }
EvalMethod EvalMethod::dense_only() { return {MethodKind::dense_only, AlphaValue::from_tenths(10)}; }
EvalMethod EvalMethod::fixed(AlphaValue alpha) { return {MethodKind::fixed, alpha}; }
EvalMethod EvalMethod::dat(Judge& judge) {
  return {MethodKind::dat, AlphaValue::from_tenths(5), &judge};
}

std::string EvalMethod::label() const {
  switch (kind) {
    case MethodKind::bm25_only: return "bm25_only";
    case MethodKind::dense_only: return "dense_only";
    case MethodKind::fixed: return "fixed(" + alpha.str() + ")";
    case MethodKind::dat:
      return "dat(" + std::string(judge ? to_string(judge->kind()) : "none") + ")";
  }
  return "unknown";
}

void validate(const EvalOptions& options) {
  if (options.k < 20) throw ConfigError("evaluation needs k >= 20 for MRR@20");
  if (options.pool_n < options.k) {
    throw ConfigError("pool_n " + std::to_string(options.pool_n) + " is smaller than k " +
                      std::to_string(options.k));
  }
}

EvalReport run_eval(const EvalMethod& method, const Retriever& retriever,
                    const EvalOptions& options) {
  validate(options);
  if (method.kind == MethodKind::dat && !method.judge) {
    throw ConfigError("dat evaluation needs a judge");
  }
  const auto& corpus = retriever.corpus();
  const auto queries = select_queries(corpus, options);

  std::vector<std::string> texts;
  texts.reserve(queries.size());
  for (const auto* q : queries) texts.push_back(q->text);
  const auto vectors = retriever.embed_queries(texts, options.embed_batch_size);

  EvalReport report;
  report.method_label = method.label();
  report.pool_n = options.pool_n;
  report.records.resize(queries.size());

  parallel_for(queries.size(), options.parallelism, [&](std::size_t i) {
    const auto& q = *queries[i];
    const auto pools = retriever.retrieve(q.text, vectors[i], options.pool_n);
    auto& rec = report.records[i];
    rec.query_id = q.id;
    rec.gold_id = q.gold_paragraph_id;
    rec.gold_rank_by_alpha = alpha_grid_ranks(pools, q.gold_paragraph_id, options.pool_n);
    if (const auto* t = pools.dense.top()) rec.dense_top1 = t->id;
    if (const auto* t = pools.bm25.top()) rec.bm25_top1 = t->id;
    if (method.kind == MethodKind::dat) {
      std::optional<std::string_view> gold;
      if (method.judge->kind() == JudgeKind::oracle) {
        gold = corpus.paragraph(q.gold_paragraph_id).text;
      }
      const auto result = fuse_dat(corpus, q.text, pools, *method.judge, options.k, gold);
      rec.chosen_alpha = result.alpha_used;
      rec.verdict = result.verdict;
    } else {
      rec.chosen_alpha = method.alpha;
    }
    rec.chosen_rank = rec.gold_rank_by_alpha[static_cast<std::size_t>(rec.chosen_alpha.tenths())];
  });

  fill_aggregates(report);
  return report;
}

EvalReport restrict_report(const EvalReport& report, const std::set<std::string>& ids) {
  EvalReport out;
  out.method_label = report.method_label;
  out.pool_n = report.pool_n;
  for (const auto& r : report.records) {
    if (ids.contains(r.query_id)) out.records.push_back(r);
  }
  fill_aggregates(out);
  return out;
}

void check_consistency(const EvalReport& report) {
  EvalReport again = report;
  fill_aggregates(again);
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
  if (again.n_queries != report.n_queries ||
      again.n_fallback_verdicts != report.n_fallback_verdicts ||
      !near(again.precision_at_1, report.precision_at_1) ||
      !near(again.mrr_at_20, report.mrr_at_20) ||
      !near(again.alpha_selection_accuracy, report.alpha_selection_accuracy)) {
    throw ContractViolation("report aggregates for " + report.method_label +
                            " do not match its records");
  }
  for (const auto& r : report.records) {
    if (r.chosen_rank != r.gold_rank_by_alpha[static_cast<std::size_t>(r.chosen_alpha.tenths())]) {
      throw ContractViolation("record " + r.query_id + " has a chosen rank off its grid");
    }
  }
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using ojson = nlohmann::ordered_json;

ojson rank_json(const Rank& r) { return r ? ojson(*r) : ojson(nullptr); }

Rank rank_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::size_t>();
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  ojson doc;
  doc["format"] = "hybrid-eval-report";
  doc["version"] = 1;
  doc["method"] = report.method_label;
  doc["pool_n"] = report.pool_n;
  doc["n_queries"] = report.n_queries;
  doc["n_fallback_verdicts"] = report.n_fallback_verdicts;
  doc["precision_at_1"] = report.precision_at_1;
  doc["mrr_at_20"] = report.mrr_at_20;
  doc["alpha_selection_accuracy"] = report.alpha_selection_accuracy;
  doc["records"] = ojson::array();
  for (const auto& r : report.records) {
    ojson rec;
    rec["query_id"] = r.query_id;
    rec["gold_id"] = r.gold_id;
    rec["chosen_alpha"] = r.chosen_alpha.str();
    rec["chosen_rank"] = rank_json(r.chosen_rank);
    ojson grid;
    for (const auto a : AlphaValue::grid()) {
      grid[a.str()] = rank_json(r.gold_rank_by_alpha[static_cast<std::size_t>(a.tenths())]);
    }
    rec["gold_rank_by_alpha"] = grid;
    ojson optimal = ojson::array();
    for (const auto a : optimal_alpha_set(r.gold_rank_by_alpha)) optimal.push_back(a.str());
    rec["optimal_alphas"] = optimal;
    rec["dense_top1"] = r.dense_top1 ? ojson(*r.dense_top1) : ojson(nullptr);
    rec["bm25_top1"] = r.bm25_top1 ? ojson(*r.bm25_top1) : ojson(nullptr);
    if (r.verdict) {
      ojson v;
      v["s_dense"] = r.verdict->s_dense.value();
      v["s_bm25"] = r.verdict->s_bm25.value();
      v["raw_response"] = r.verdict->raw_response;
      v["retries_used"] = r.verdict->retries_used;
      v["is_fallback"] = r.verdict->is_fallback;
      rec["verdict"] = v;
    } else {
      rec["verdict"] = nullptr;
    }
    doc["records"].push_back(rec);
  }
  return doc.dump(1) + "\n";
}

EvalReport report_from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format") != "hybrid-eval-report") throw ParseError("not an evaluation report");
    EvalReport report;
    report.method_label = doc.at("method").get<std::string>();
    report.pool_n = doc.at("pool_n").get<std::size_t>();
    report.n_queries = doc.at("n_queries").get<std::size_t>();
    report.n_fallback_verdicts = doc.at("n_fallback_verdicts").get<std::size_t>();
    report.precision_at_1 = doc.at("precision_at_1").get<double>();
    report.mrr_at_20 = doc.at("mrr_at_20").get<double>();
    report.alpha_selection_accuracy = doc.at("alpha_selection_accuracy").get<double>();
    for (const auto& j : doc.at("records")) {
      QueryEvalRecord r;
      r.query_id = j.at("query_id").get<std::string>();
      r.gold_id = j.at("gold_id").get<std::string>();
      r.chosen_alpha = AlphaValue::from_real(std::stod(j.at("chosen_alpha").get<std::string>()));
      r.chosen_rank = rank_from(j.at("chosen_rank"));
      for (const auto a : AlphaValue::grid()) {
        r.gold_rank_by_alpha[static_cast<std::size_t>(a.tenths())] =
            rank_from(j.at("gold_rank_by_alpha").at(a.str()));
      }
      if (!j.at("dense_top1").is_null()) r.dense_top1 = j["dense_top1"].get<std::string>();
      if (!j.at("bm25_top1").is_null()) r.bm25_top1 = j["bm25_top1"].get<std::string>();
      if (const auto& v = j.at("verdict"); !v.is_null()) {
        JudgeVerdict verdict;
        verdict.s_dense = EffectivenessScore(v.at("s_dense").get<int>());
        verdict.s_bm25 = EffectivenessScore(v.at("s_bm25").get<int>());
        verdict.raw_response = v.at("raw_response").get<std::string>();
        verdict.retries_used = v.at("retries_used").get<int>();
        verdict.is_fallback = v.at("is_fallback").get<bool>();
        r.verdict = verdict;
      }
      report.records.push_back(std::move(r));
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed evaluation report: ") + e.what());
  }
}

std::string report_table(std::span<const EvalReport> reports, std::string_view title) {
  std::string out;
  if (!title.empty()) out += fmt::format("{}\n", title);
  out += fmt::format("{:<24} {:>8} {:>8} {:>10} {:>8} {:>9}\n", "Method", "P@1", "MRR@20",
                     "AlphaAcc", "Queries", "Fallback");
  for (const auto& r : reports) {
    out += fmt::format("{:<24} {:>8.4f} {:>8.4f} {:>10.4f} {:>8} {:>9}\n", r.method_label,
                       r.precision_at_1, r.mrr_at_20, r.alpha_selection_accuracy, r.n_queries,
                       r.n_fallback_verdicts);
  }
  return out;
}

}  // namespace hybrid
