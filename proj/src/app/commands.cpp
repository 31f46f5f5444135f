#include <algorithm>
#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

#include "hybrid/app.hpp"
#include "hybrid/error.hpp"

namespace hybrid::app {

SearchMode parse_search_mode(std::string_view name) {
  if (name == "bm25") return SearchMode::bm25;
  if (name == "dense") return SearchMode::dense;
  if (name == "fixed") return SearchMode::fixed;
  if (name == "dat") return SearchMode::dat;
  throw ConfigError("unknown search mode '" + std::string(name) + "'");
}

Subset parse_subset(std::string_view name) {
  if (name == "all") return Subset::all;
  if (name == "hybrid_sensitive") return Subset::hybrid_sensitive;
  throw ConfigError("unknown subset '" + std::string(name) + "'");
}

std::string report_stem(std::string_view method_label) {
  std::string out;
  for (char c : method_label) {
    if (c == '(') {
      out += '_';
    } else if (c != ')') {
      out += c;
    }
  }
  return out;
}

namespace {

Tokenizer make_tokenizer(const AppConfig& config) {
  if (config.tokenizer == TokenizerVariant::external) {
    return Tokenizer::load_external(config.tokenizer_table);
  }
  return Tokenizer(config.tokenizer);
}

bool uses_live_embedding(const EmbeddingProviderConfig& c) {
  if (c.kind == EmbeddingKind::remote_http) return true;
  return c.kind == EmbeddingKind::cached && !c.cache_only && c.inner &&
         c.inner->kind == EmbeddingKind::remote_http;
}

void label_live(const AppConfig& config, bool judging, std::ostream& out) {
  if (uses_live_embedding(config.embedding)) {
    out << "# live embedding provider: " << config.embedding.effective_model_id() << '\n';
  }
  if (judging && config.judge.kind == JudgeKind::remote_llm) {
    out << "# live judge: " << config.judge.model_id << '\n';
  }
}

void require_file(const std::filesystem::path& path, std::string_view hint) {
  if (path.empty()) throw ConfigError(std::string(hint) + " is not configured");
  if (!std::filesystem::exists(path)) {
    throw NotFoundError(path.string() + " does not exist (" + std::string(hint) + ")");
  }
}

// Corpus, both indexes and the query embedder, checked against each other.
class Workspace {
 public:
  Workspace(const AppConfig& config, const Services& services)
      : corpus_(load(config)),
        sparse_(InvertedIndex::load(
            config.bm25_index_path(),
            config.tokenizer == TokenizerVariant::external
                ? std::optional<Tokenizer>(make_tokenizer(config))
                : std::nullopt)),
        dense_(DenseIndex::load(config.dense_index_path())),
        embedder_(make_embedding_provider(config.embedding, services.embedding_transport)),
        retriever_(corpus_, sparse_, dense_, *embedder_) {
    if (!(sparse_.params() == config.bm25) || sparse_.tokenizer().variant() != config.tokenizer) {
      throw ConfigError("BM25 index was built with other settings; rerun the index command");
    }
  }

  const Corpus& corpus() const { return corpus_; }
  const Retriever& retriever() const { return retriever_; }

 private:
  static Corpus load(const AppConfig& config) {
    require_file(config.corpus_path, "corpus_path; run ingest first");
    require_file(config.bm25_index_path(), "BM25 index; run index first");
    require_file(config.dense_index_path(), "dense index; run index first");
    return load_corpus(config.corpus_path);
  }

  Corpus corpus_;
  InvertedIndex sparse_;
  DenseIndex dense_;
  std::unique_ptr<EmbeddingProvider> embedder_;
  Retriever retriever_;
};

EvalOptions eval_options(const AppConfig& config) {
  EvalOptions o;
  o.pool_n = config.pool_n;
  o.k = config.k;
  o.parallelism = config.parallelism;
  o.embed_batch_size = config.embedding.batch_size;
  return o;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<const QueryRecord*> sorted_queries(const Corpus& corpus) {
  std::vector<const QueryRecord*> out;
  for (const auto& q : corpus.queries()) out.push_back(&q);
  std::sort(out.begin(), out.end(),
            [](const QueryRecord* a, const QueryRecord* b) { return a->id < b->id; });
  return out;
}

}  // namespace

void cmd_ingest(const AppConfig& config, std::ostream& out) {
  require_file(config.source_path, "source_path");
  if (config.corpus_path.empty()) throw ConfigError("corpus_path is not configured");
  const auto source = load_squad_format(config.source_path, config.source_language);
  const auto sampled = sample_corpus(source, config.max_questions, config.seed);
  save_corpus(sampled, config.corpus_path);
  out << fmt::format("articles {} paragraphs {} questions {} language {}\n",
                     sampled.article_ids().size(), sampled.paragraphs().size(),
                     sampled.queries().size(), to_string(sampled.language()));
}

void cmd_index(const AppConfig& config, std::ostream& out, const Services& services) {
  config.validate();
  require_file(config.corpus_path, "corpus_path; run ingest first");
  label_live(config, false, out);
  const auto corpus = load_corpus(config.corpus_path);
  const auto sparse = InvertedIndex::build(corpus, make_tokenizer(config), config.bm25);
  sparse.save(config.bm25_index_path());
  auto embedder = make_embedding_provider(config.embedding, services.embedding_transport);
  const auto dense = DenseIndex::build(corpus, *embedder, config.embedding.batch_size);
  dense.save(config.dense_index_path());
  out << fmt::format("bm25 docs {} terms {}\ndense vectors {} dim {} model {}\n",
                     sparse.doc_count(), sparse.term_count(), dense.size(), dense.dim(),
                     dense.model_id());
}

void cmd_search(const AppConfig& config, std::string_view query, SearchMode mode,
                std::ostream& out, const Services& services) {
  config.validate();
  if (query.empty()) throw ConfigError("search needs a non-empty query");
  const Workspace ws(config, services);
  label_live(config, mode == SearchMode::dat, out);
  const auto& retriever = ws.retriever();

  ScoredList ranking;
  switch (mode) {
    case SearchMode::bm25:
      ranking = retriever.sparse().search(query, config.k);
      break;
    case SearchMode::dense:
      ranking = retriever.dense().search(retriever.embed_query(query), config.k);
      break;
    case SearchMode::fixed: {
      const auto r = hybrid_search_fixed(retriever, query, config.fixed_alpha, config.k, config.pool_n);
      out << "alpha " << r.alpha_used.str() << '\n';
      ranking = r.ranking;
      break;
    }
    case SearchMode::dat: {
      auto judge = make_judge(config.judge, services.judge_transport);
      // The oracle judge can only grade queries whose gold paragraph is known.
      std::optional<std::string_view> gold;
      if (judge->kind() == JudgeKind::oracle) {
        for (const auto& q : ws.corpus().queries()) {
          if (q.text == query) gold = ws.corpus().paragraph(q.gold_paragraph_id).text;
        }
      }
      const auto r = hybrid_search_dat(retriever, query, *judge, config.k, config.pool_n, gold);
      if (r.verdict) {
        out << fmt::format("S_v {} S_b {} alpha {}{}\n", r.verdict->s_dense.value(),
                           r.verdict->s_bm25.value(), r.alpha_used.str(),
                           r.verdict->is_fallback ? " (fallback verdict)" : "");
      } else {
        out << "alpha " << r.alpha_used.str() << " (one pool empty, judge skipped)\n";
      }
      ranking = r.ranking;
      break;
    }
  }
  std::size_t rank = 1;
  for (const auto& e : ranking) out << fmt::format("{}\t{}\t{:.6f}\n", rank++, e.id, e.score);
}

std::vector<EvalReport> cmd_eval(const AppConfig& config, const std::vector<std::string>& methods,
                                 Subset subset, std::ostream& out, const Services& services) {
  config.validate();
  std::vector<std::string> names;
  for (const auto& m : methods.empty() ? std::vector<std::string>{"all"} : methods) {
    if (m == "all") {
      for (const char* n : {"bm25_only", "dense_only", "fixed", "dat"}) names.emplace_back(n);
    } else if (m == "bm25_only" || m == "dense_only" || m == "fixed" || m == "dat") {
      names.push_back(m);
    } else {
      throw ConfigError("unknown evaluation method '" + m + "'");
    }
  }

  const Workspace ws(config, services);
  const bool judging = std::find(names.begin(), names.end(), "dat") != names.end();
  label_live(config, judging, out);
  std::unique_ptr<Judge> judge;
  if (judging) judge = make_judge(config.judge, services.judge_transport);

  const auto options = eval_options(config);
  std::vector<EvalReport> reports;
  for (const auto& name : names) {
    EvalMethod method;
    if (name == "bm25_only") method = EvalMethod::bm25_only();
    if (name == "dense_only") method = EvalMethod::dense_only();
    if (name == "fixed") method = EvalMethod::fixed(config.fixed_alpha);
    if (name == "dat") method = EvalMethod::dat(*judge);
    reports.push_back(run_eval(method, ws.retriever(), options));
  }

  // Gold ranks over the alpha grid do not depend on the method, so any
  // report defines the subset.
  std::string suffix;
  if (subset == Subset::hybrid_sensitive) {
    const auto ids = hybrid_sensitive_subset(reports.front().records);
    for (auto& r : reports) r = restrict_report(r, ids);
    suffix = ".hybrid_sensitive";
  }

  for (const auto& r : reports) {
    check_consistency(r);
    write_text(config.out_dir / (report_stem(r.method_label) + suffix + ".json"), report_to_json(r));
  }
  const auto title = subset == Subset::all ? std::string("Complete dataset")
                                           : std::string("Hybrid-sensitive subset");
  const auto table = report_table(reports, title);
  write_text(config.out_dir / ("summary" + suffix + ".txt"), table);
  out << table;
  return reports;
}

GridSearchResult cmd_grid_search(const AppConfig& config, std::ostream& out,
                                 const Services& services) {
  config.validate();
  const Workspace ws(config, services);
  label_live(config, false, out);
  const auto& queries = ws.corpus().queries();
  if (queries.empty()) throw ConfigError("grid search needs at least one query");
  const auto result = grid_search_alpha(ws.retriever(), queries, config.pool_n, config.parallelism);

  nlohmann::ordered_json doc;
  doc["best_alpha"] = result.best.str();
  std::string table = "alpha\tP@1\n";
  for (const auto a : AlphaValue::grid()) {
    const double p = result.precision_at_1[static_cast<std::size_t>(a.tenths())];
    doc["precision_at_1"][a.str()] = p;
    table += fmt::format("{}\t{:.4f}\n", a.str(), p);
  }
  write_text(config.out_dir / "grid_search.json", doc.dump(1) + "\n");
  out << table << "best alpha " << result.best.str() << '\n';
  return result;
}

std::filesystem::path cmd_judge_dump(const AppConfig& config, std::ostream& out,
                                     const std::filesystem::path& fixture_path,
                                     const Services& services) {
  config.validate();
  const auto target = fixture_path.empty() ? config.judge.replay_path : fixture_path;
  if (target.empty()) throw ConfigError("judge-dump needs judge.replay_path or an output path");
  const Workspace ws(config, services);
  label_live(config, true, out);
  auto inner = make_judge(config.judge, services.judge_transport);
  RecordingJudge recorder(*inner);

  const auto& corpus = ws.corpus();
  const auto& retriever = ws.retriever();
  std::size_t fallbacks = 0;
  std::size_t judged = 0;
  for (const auto* q : sorted_queries(corpus)) {
    std::optional<std::string_view> gold;
    if (inner->kind() == JudgeKind::oracle) gold = corpus.paragraph(q->gold_paragraph_id).text;
    const auto pools = retriever.retrieve(q->text, config.pool_n);
    const auto r = fuse_dat(corpus, q->text, pools, recorder, config.k, gold);
    if (r.verdict) {
      ++judged;
      fallbacks += r.verdict->is_fallback ? 1 : 0;
    }
  }
  const auto store = recorder.store();
  store.save(target);
  out << fmt::format("recorded {} verdicts for {} judged queries ({} fallbacks) to {}\n",
                     store.size(), judged, fallbacks, target.string());
  return target;
}

}  // namespace hybrid::app
