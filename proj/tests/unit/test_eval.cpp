#include <gtest/gtest.h>

#include <random>

#include "hybrid/error.hpp"
#include "hybrid/eval.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace hybrid;

namespace {

constexpr Rank kNone = std::nullopt;

GridRanks grid_of(std::initializer_list<Rank> ranks) {
  GridRanks g{};
  std::size_t i = 0;
  for (const auto& r : ranks) g[i++] = r;
  return g;
}

GridRanks uniform(Rank r) {
  GridRanks g{};
  g.fill(r);
  return g;
}

std::vector<int> tenths(const std::vector<AlphaValue>& alphas) {
  std::vector<int> out;
  for (const auto a : alphas) out.push_back(a.tenths());
  return out;
}

QueryEvalRecord record(std::string id, GridRanks grid, int chosen) {
  QueryEvalRecord r;
  r.query_id = std::move(id);
  r.gold_id = "g";
  r.gold_rank_by_alpha = grid;
  r.chosen_alpha = AlphaValue::from_tenths(chosen);
  r.chosen_rank = grid[static_cast<std::size_t>(chosen)];
  return r;
}

Rank random_rank(std::mt19937_64& rng) {
  const auto x = rng() % 30;
  if (x == 0) return kNone;
  return static_cast<std::size_t>(x);
}

// Lexical queries hit BM25, paraphrase queries hit only the dense side.
struct Fixture {
  Corpus corpus;
  InvertedIndex sparse;
  DeterministicEmbedder embedder{"hashed-ngram-v1", 128, 0};
  DenseIndex dense;
  Fixture()
      : corpus(make_corpus()),
        sparse(build_index(corpus, Tokenizer())),
        dense(build_dense_index(corpus, embedder)) {}

  static Corpus make_corpus() {
    std::vector<Paragraph> ps;
    std::vector<QueryRecord> qs;
    const char* topics[] = {"lighthouse", "honeybee", "volcano", "glacier", "orchard",
                            "harbor",     "comet",    "desert",  "violin",  "bridge"};
    for (int i = 0; i < 30; ++i) {
      const std::string id = "p" + std::to_string(100 + i);
      const std::string t = topics[i % 10];
      ps.push_back({id, "art" + std::to_string(i % 10),
                    t + " keepers record " + t + " stories number " + std::to_string(i) +
                        " with extra words filler" + std::to_string(i)});
      if (i < 24) qs.push_back({"q" + std::to_string(100 + i), t + " stories number " + std::to_string(i), id});
    }
    return Corpus(std::move(ps), std::move(qs));
  }
};

}  // namespace

TEST(Metrics, DocumentedExamples) {
  const std::vector<Rank> a{1, 4, kNone};
  EXPECT_NEAR(mrr_at_20(a), (1.0 + 0.25) / 3.0, 1e-15);
  EXPECT_NEAR(mrr_at_20(a), 0.41667, 1e-5);
  EXPECT_EQ(mrr_at_20(std::vector<Rank>{21}), 0.0);
  EXPECT_EQ(mrr_at_20(std::vector<Rank>{20}), 1.0 / 20.0);
  EXPECT_NEAR(precision_at_1(std::vector<Rank>{1, 1, 3}), 2.0 / 3.0, 1e-15);
  EXPECT_THROW(mrr_at_20(std::vector<Rank>{}), ContractViolation);
  EXPECT_THROW(precision_at_1(std::vector<Rank>{}), ContractViolation);
}

TEST(Metrics, AgreeWithOracleOnRandomRanks) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 300; ++t) {
    std::vector<Rank> ranks(1 + rng() % 40);
    for (auto& r : ranks) r = random_rank(rng);
    EXPECT_NEAR(mrr_at_20(ranks), oracle::mrr_at_20(ranks), 1e-12);
    EXPECT_NEAR(precision_at_1(ranks), oracle::precision_at_1(ranks), 1e-12);
    EXPECT_LE(precision_at_1(ranks), mrr_at_20(ranks) + 1e-15);
  }
}

TEST(OptimalAlphaSet, Examples) {
  EXPECT_EQ(tenths(optimal_alpha_set(grid_of({3, 2, 1, 1, 2, 5, 5, 5, 5, 5, 5}))),
            (std::vector<int>{2, 3}));
  EXPECT_EQ(tenths(optimal_alpha_set(grid_of({kNone, kNone, kNone, kNone, kNone, kNone, kNone, kNone,
                                              kNone, kNone, 7}))),
            std::vector<int>{10});
  EXPECT_EQ(optimal_alpha_set(uniform(kNone)).size(), 11u);
  EXPECT_EQ(optimal_alpha_set(uniform(4)).size(), 11u);
}

TEST(OptimalAlphaSet, MatchesOracle) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 500; ++t) {
    GridRanks g;
    std::vector<oracle::Rank> v;
    for (auto& r : g) {
      r = rng() % 3 == 0 ? kNone : Rank(1 + rng() % 4);
      v.push_back(r);
    }
    const auto want = oracle::optimal_tenths(v);
    const auto got = tenths(optimal_alpha_set(g));
    EXPECT_EQ(std::set<int>(got.begin(), got.end()), want);
    EXPECT_TRUE(std::is_sorted(got.begin(), got.end()));
  }
}

TEST(AlphaAccuracy, CountsChosenInOptimalSet) {
  const std::vector<QueryEvalRecord> records{
      record("a", grid_of({1, 1, 2, 2, 2, 2, 2, 2, 2, 2, 2}), 0),
      record("b", grid_of({1, 1, 2, 2, 2, 2, 2, 2, 2, 2, 2}), 5),
      record("c", uniform(kNone), 7),
      record("d", uniform(3), 2)};
  EXPECT_NEAR(alpha_selection_accuracy(records), 0.75, 1e-15);
  EXPECT_NEAR(precision_at_1(records), 0.25, 1e-15);
}

TEST(HybridSensitive, Examples) {
  const std::vector<QueryEvalRecord> records{
      record("mixed", grid_of({1, 1, 2, 2, 2, 2, 2, 2, 2, 2, 2}), 0),
      record("always_first", uniform(1), 0),
      record("never", uniform(kNone), 0),
      record("tail", grid_of({2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 1}), 0)};
  EXPECT_EQ(hybrid_sensitive_subset(records), (std::set<std::string>{"mixed", "tail"}));
}

TEST(HybridSensitive, MatchesOracle) {
  std::mt19937_64 rng(12);
  std::vector<QueryEvalRecord> records;
  std::set<std::string> want;
  for (int t = 0; t < 300; ++t) {
    GridRanks g;
    std::vector<oracle::Rank> v;
    for (auto& r : g) {
      r = rng() % 4 == 0 ? kNone : Rank(1 + rng() % 2);
      v.push_back(r);
    }
    records.push_back(record("r" + std::to_string(t), g, 0));
    if (oracle::hybrid_sensitive(v)) want.insert(records.back().query_id);
  }
  EXPECT_EQ(hybrid_sensitive_subset(records), want);
}

TEST(GridSearch, PicksBestWithSmallestAlphaOnTies) {
  const std::vector<GridRanks> grids{grid_of({1, 1, 2, 2, 2, 2, 2, 2, 2, 2, 2}),
                                     grid_of({2, 2, 2, 1, 1, 1, 2, 2, 2, 2, 2}),
                                     grid_of({2, 1, 1, 1, 2, 2, 2, 2, 2, 2, 2})};
  const auto r = grid_search_alpha(grids);
  EXPECT_EQ(r.best.tenths(), 1);
  EXPECT_NEAR(r.precision_at_1[1], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.precision_at_1[10], 0.0, 1e-15);
  EXPECT_EQ(grid_search_alpha(std::vector<GridRanks>{uniform(kNone)}).best.tenths(), 0);
  EXPECT_THROW(grid_search_alpha(std::vector<GridRanks>{}), ContractViolation);
}

TEST(EvalOptions, Validation) {
  EvalOptions o;
  EXPECT_NO_THROW(validate(o));
  o.k = 10;
  EXPECT_THROW(validate(o), ConfigError);
  o.k = 30;
  o.pool_n = 25;
  EXPECT_THROW(validate(o), ConfigError);
}

TEST(RunEval, RecordsAreConsistentAndDeterministic) {
  Fixture f;
  const Retriever retriever(f.corpus, f.sparse, f.dense, f.embedder);
  OracleJudge oracle_judge;
  EvalOptions opts;
  opts.pool_n = 30;
  opts.k = 20;
  for (const auto& method : {EvalMethod::bm25_only(), EvalMethod::dense_only(),
                             EvalMethod::fixed(AlphaValue::from_tenths(6)), EvalMethod::dat(oracle_judge)}) {
    const auto report = run_eval(method, retriever, opts);
    EXPECT_EQ(report.method_label, method.label());
    EXPECT_EQ(report.n_queries, 24u);
    EXPECT_EQ(report.pool_n, 30u);
    EXPECT_NO_THROW(check_consistency(report));
    EXPECT_TRUE(std::is_sorted(report.records.begin(), report.records.end(),
                               [](const auto& a, const auto& b) { return a.query_id < b.query_id; }));
    for (const auto& r : report.records) {
      EXPECT_EQ(r.chosen_rank, r.gold_rank_by_alpha[static_cast<std::size_t>(r.chosen_alpha.tenths())]);
      const auto best = optimal_alpha_set(r.gold_rank_by_alpha).front();
      const auto best_rank = r.gold_rank_by_alpha[static_cast<std::size_t>(best.tenths())];
      if (best_rank.has_value()) {
        EXPECT_TRUE(r.chosen_rank.has_value());
        if (r.chosen_rank.has_value()) {
          EXPECT_LE(*best_rank, *r.chosen_rank) << r.query_id;
        }
      }
      EXPECT_EQ(r.gold_rank_by_alpha, alpha_grid_ranks(retriever, *std::find_if(
                                                          f.corpus.queries().begin(), f.corpus.queries().end(),
                                                          [&](const auto& q) { return q.id == r.query_id; }),
                                                      30));
    }
    opts.parallelism = 3;
    EXPECT_EQ(run_eval(method, retriever, opts), report);
    opts.parallelism = 1;
  }
  EXPECT_EQ(EvalMethod::fixed(AlphaValue::from_tenths(6)).label(), "fixed(0.6)");
  EXPECT_EQ(EvalMethod::dat(oracle_judge).label(), "dat(oracle)");
}

TEST(RunEval, ReportJsonRoundTrip) {
  Fixture f;
  const Retriever retriever(f.corpus, f.sparse, f.dense, f.embedder);
  FixedJudge judge(2, 3);
  EvalOptions opts;
  opts.pool_n = 25;
  const auto report = run_eval(EvalMethod::dat(judge), retriever, opts);
  const auto text = report_to_json(report);
  EXPECT_EQ(report_from_json(text), report);
  EXPECT_EQ(report_to_json(report_from_json(text)), text);
  EXPECT_NE(text.find("\"format\": \"hybrid-eval-report\""), std::string::npos);
  EXPECT_EQ(text.back(), '\n');
  EXPECT_THROW(report_from_json("{\"format\":\"nope\"}"), ParseError);
}

TEST(RunEval, SubsetAndRestriction) {
  Fixture f;
  const Retriever retriever(f.corpus, f.sparse, f.dense, f.embedder);
  EvalOptions opts;
  opts.pool_n = 30;
  const auto full = run_eval(EvalMethod::fixed(AlphaValue::from_tenths(3)), retriever, opts);
  const std::set<std::string> ids{"q101", "q105", "q117"};
  opts.subset = ids;
  const auto sub = run_eval(EvalMethod::fixed(AlphaValue::from_tenths(3)), retriever, opts);
  EXPECT_EQ(sub.n_queries, 3u);
  EXPECT_EQ(restrict_report(full, ids), sub);
  auto broken = sub;
  broken.precision_at_1 += 0.01;
  EXPECT_THROW(check_consistency(broken), ContractViolation);
}

TEST(ReportTable, ListsEveryMethod) {
  EvalReport a;
  a.method_label = "bm25_only";
  a.precision_at_1 = 0.5;
  a.n_queries = 10;
  EvalReport b = a;
  b.method_label = "dat(replay)";
  const auto table = report_table(std::vector<EvalReport>{a, b}, "title");
  for (const char* needle : {"Method", "P@1", "MRR@20", "bm25_only", "dat(replay)", "0.5000", "title"}) {
    EXPECT_NE(table.find(needle), std::string::npos) << needle << "\n" << table;
  }
}
