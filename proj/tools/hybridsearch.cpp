// Command-line front end over hybrid::app.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hybrid/app.hpp"
#include "hybrid/error.hpp"
#include "hybrid/kernels.hpp"

namespace {

struct Overrides {
  std::optional<double> alpha;
  std::optional<std::size_t> pool_n;
  std::optional<std::size_t> k;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> judge_kind;
  bool strict_parse = false;
  std::optional<std::string> kernel;
};

hybrid::app::AppConfig configure(const std::string& path, const Overrides& o) {
  auto config = hybrid::app::load_app_config(path);
  if (o.alpha) config.fixed_alpha = hybrid::AlphaValue::from_real(*o.alpha);
  if (o.pool_n) config.pool_n = *o.pool_n;
  if (o.k) config.k = *o.k;
  if (o.seed) config.seed = *o.seed;
  if (o.out_dir) config.out_dir = *o.out_dir;
  if (o.judge_kind) config.judge.kind = hybrid::parse_judge_kind(*o.judge_kind);
  if (o.strict_parse) config.judge.strict_parse = true;
  if (o.kernel) hybrid::kernels::select(hybrid::kernels::parse_isa(*o.kernel));
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Hybrid BM25 + dense retrieval with per-query fusion weights"};
  cli.require_subcommand(1);
  cli.fallthrough();

  std::string config_path;
  Overrides o;
  cli.add_option("--config", config_path, "JSON config file")->required();
  cli.add_option("--alpha", o.alpha, "fixed fusion weight on the 0.1 grid");
  cli.add_option("--pool-n", o.pool_n, "per-method candidate pool size");
  cli.add_option("--k", o.k, "results returned");
  cli.add_option("--seed", o.seed, "sampling seed");
  cli.add_option("--out-dir", o.out_dir, "directory for reports");
  cli.add_option("--judge-kind", o.judge_kind, "remote_llm, oracle, replay or fixed");
  cli.add_flag("--strict-parse", o.strict_parse, "accept only an exact 'a b' judge reply");
  cli.add_option("--kernel", o.kernel, "scalar, avx2 or neon");

  auto* ingest = cli.add_subcommand("ingest", "sample a SQuAD-format source into a corpus file");
  auto* index = cli.add_subcommand("index", "build and persist both indexes");

  auto* search = cli.add_subcommand("search", "rank paragraphs for one query");
  std::string query;
  std::string mode = "dat";
  search->add_option("query", query, "query text")->required();
  search->add_option("--mode", mode, "bm25, dense, fixed or dat");

  auto* eval = cli.add_subcommand("eval", "evaluate retrieval methods over the corpus queries");
  std::vector<std::string> methods{"all"};
  std::string subset = "all";
  eval->add_option("--method", methods, "bm25_only, dense_only, fixed, dat or all");
  eval->add_option("--subset", subset, "all or hybrid_sensitive");

  auto* grid = cli.add_subcommand("grid-search", "Precision@1 at every grid alpha");

  auto* dump = cli.add_subcommand("judge-dump", "record judge verdicts as replay fixtures");
  std::string fixture_out;
  dump->add_option("--fixtures", fixture_out, "output path (default judge.replay_path)");

  CLI11_PARSE(cli, argc, argv);

  try {
    const auto config = configure(config_path, o);
    if (ingest->parsed()) hybrid::app::cmd_ingest(config, std::cout);
    if (index->parsed()) hybrid::app::cmd_index(config, std::cout);
    if (search->parsed()) {
      hybrid::app::cmd_search(config, query, hybrid::app::parse_search_mode(mode), std::cout);
    }
    if (eval->parsed()) {
      hybrid::app::cmd_eval(config, methods, hybrid::app::parse_subset(subset), std::cout);
    }
    if (grid->parsed()) hybrid::app::cmd_grid_search(config, std::cout);
    if (dump->parsed()) hybrid::app::cmd_judge_dump(config, std::cout, fixture_out);
  } catch (const hybrid::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
