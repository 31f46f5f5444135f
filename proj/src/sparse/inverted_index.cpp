#include "hybrid/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>

#include <json.hpp>

#include "hybrid/error.hpp"

namespace hybrid {

void Bm25Params::validate() const {
  if (!(k1 >= 0.0) || !std::isfinite(k1)) throw ConfigError("bm25 k1 must be a finite value >= 0");
  if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("bm25 b must lie in [0, 1]");
}

InvertedIndex InvertedIndex::build(const Corpus& corpus, Tokenizer tokenizer, Bm25Params params) {
  params.validate();
  if (corpus.empty()) throw EmptyCorpusError("cannot build a BM25 index over an empty corpus");
  if (corpus.paragraphs().size() > std::numeric_limits<std::uint32_t>::max()) {
    throw ConfigError("corpus too large for 32-bit document ids");
  }

  InvertedIndex index;
  index.params_ = params;
  index.tokenizer_ = std::move(tokenizer);
  const auto& paragraphs = corpus.paragraphs();
  index.doc_ids_.reserve(paragraphs.size());
  index.doc_len_.reserve(paragraphs.size());

  std::map<std::string, std::uint32_t> counts;
  for (std::uint32_t doc = 0; doc < paragraphs.size(); ++doc) {
    const auto tokens = index.tokenizer_(paragraphs[doc].text);
    index.doc_ids_.push_back(paragraphs[doc].id);
    index.doc_len_.push_back(static_cast<std::uint32_t>(tokens.size()));
    counts.clear();
    for (const auto& t : tokens) ++counts[t];
    for (const auto& [term, tf] : counts) index.postings_[term].push_back({doc, tf});
  }
  index.finalize();
  return index;
}

void InvertedIndex::finalize() {
  doc_index_.clear();
  doc_index_.reserve(doc_ids_.size());
  std::uint64_t total = 0;
  for (std::uint32_t doc = 0; doc < doc_ids_.size(); ++doc) {
    if (!doc_index_.emplace(doc_ids_[doc], doc).second) {
      throw DuplicateIdError("duplicate paragraph id '" + doc_ids_[doc] + "' in index");
    }
    total += doc_len_[doc];
  }
  total_len_ = total;
  avgdl_ = doc_ids_.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(doc_ids_.size());
}

const std::vector<Posting>* InvertedIndex::find_postings(std::string_view term) const {
  const auto it = postings_.find(std::string(term));
  return it == postings_.end() ? nullptr : &it->second;
}

std::size_t InvertedIndex::doc_freq(std::string_view term) const {
  const auto* list = find_postings(term);
  return list ? list->size() : 0;
}

std::span<const Posting> InvertedIndex::postings(std::string_view term) const {
  const auto* list = find_postings(term);
  if (!list) return {};
  return *list;
}

std::uint32_t InvertedIndex::doc_length(std::string_view paragraph_id) const {
  const auto it = doc_index_.find(std::string(paragraph_id));
  if (it == doc_index_.end()) {
    throw NotFoundError("paragraph '" + std::string(paragraph_id) + "' is not in the index");
  }
  return doc_len_[it->second];
}

std::vector<std::string> InvertedIndex::terms() const {
  std::vector<std::string> out;
  out.reserve(postings_.size());
  for (const auto& [term, _] : postings_) out.push_back(term);
  std::sort(out.begin(), out.end());
  return out;
}

double InvertedIndex::idf(std::string_view term) const {
  const auto n = static_cast<double>(doc_ids_.size());
  const auto df = static_cast<double>(doc_freq(term));
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

// idf (k1 + 1) / (1 + k1 r) with r = (1 - b + b len / avgdl) / tf, written
// as ((1 - b) L + b N len) / (tf L) over the integer total length L. For a
// dyadic b both operands are exact, so documents with mathematically equal
// r get bit-identical weights and tie exactly.
double InvertedIndex::term_weight(double term_idf, std::uint32_t tf, std::uint32_t doc_len) const {
  const double total = static_cast<double>(total_len_);
  const double n = static_cast<double>(doc_ids_.size());
  const double r = ((1.0 - params_.b) * total + params_.b * (n * doc_len)) /
                   (static_cast<double>(tf) * total);
  return term_idf * (params_.k1 + 1.0) / (1.0 + params_.k1 * r);
}

double InvertedIndex::score(std::span<const std::string> query_tokens,
                            std::string_view paragraph_id) const {
  const auto it = doc_index_.find(std::string(paragraph_id));
  if (it == doc_index_.end()) {
    throw NotFoundError("paragraph '" + std::string(paragraph_id) + "' is not in the index");
  }
  const std::uint32_t doc = it->second;
  long double total = 0.0L;
  for (const auto& token : query_tokens) {
    const auto* list = find_postings(token);
    if (!list) continue;
    const auto p = std::lower_bound(list->begin(), list->end(), doc,
                                    [](const Posting& x, std::uint32_t d) { return x.doc < d; });
    if (p == list->end() || p->doc != doc) continue;
    total += term_weight(idf(token), p->tf, doc_len_[doc]);
  }
  return static_cast<double>(total);
}

ScoredList InvertedIndex::search(std::string_view query_text, std::size_t k) const {
  const auto tokens = tokenizer_(query_text);
  return search_tokens(tokens, k);
}

ScoredList InvertedIndex::search_tokens(std::span<const std::string> query_tokens,
                                        std::size_t k) const {
  if (k == 0) throw ConfigError("search depth k must be at least 1");
  // Accumulate in query-token order so sums match score() bit for bit. The
  // extended accumulator makes documents whose weights are permutations of
  // each other tie exactly, so the id tie-break decides their order.
  std::vector<long double> acc(doc_ids_.size(), 0.0L);
  std::vector<char> touched(doc_ids_.size(), 0);
  for (const auto& token : query_tokens) {
    const auto* list = find_postings(token);
    if (!list) continue;
    const double term_idf = idf(token);
    for (const auto& p : *list) {
      acc[p.doc] += term_weight(term_idf, p.tf, doc_len_[p.doc]);
      touched[p.doc] = 1;
    }
  }
  std::vector<ScoredEntry> entries;
  for (std::uint32_t doc = 0; doc < doc_ids_.size(); ++doc) {
    if (touched[doc]) entries.push_back({doc_ids_[doc], static_cast<double>(acc[doc])});
  }
  return ScoredList::from_unsorted(std::move(entries), k);
}

bool InvertedIndex::operator==(const InvertedIndex& other) const {
  return doc_ids_ == other.doc_ids_ && doc_len_ == other.doc_len_ &&
         postings_ == other.postings_ && params_ == other.params_ &&
         tokenizer_.variant() == other.tokenizer_.variant();
}

namespace {

constexpr const char* kIndexFormat = "hybrid-bm25-index";

std::string hex_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", value);
  return buf;
}

double parse_hex_double(const std::string& text) {
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') throw ParseError("bad floating literal '" + text + "'");
  return value;
}

}  // namespace

void InvertedIndex::save(std::ostream& out) const {
  nlohmann::ordered_json header;
  header["format"] = kIndexFormat;
  header["version"] = 1;
  header["k1"] = hex_double(params_.k1);
  header["b"] = hex_double(params_.b);
  header["tokenizer"] = to_string(tokenizer_.variant());
  header["docs"] = doc_ids_.size();
  header["terms"] = postings_.size();
  out << header.dump() << '\n';
  for (std::uint32_t doc = 0; doc < doc_ids_.size(); ++doc) {
    out << nlohmann::json::array({"d", doc_ids_[doc], doc_len_[doc]}).dump() << '\n';
  }
  for (const auto& term : terms()) {
    nlohmann::json flat = nlohmann::json::array();
    for (const auto& p : postings_.at(term)) {
      flat.push_back(p.doc);
      flat.push_back(p.tf);
    }
    out << nlohmann::json::array({"t", term, std::move(flat)}).dump() << '\n';
  }
}

void InvertedIndex::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write index file " + path.string());
  save(out);
  if (!out) throw IoError("failed writing index file " + path.string());
}

InvertedIndex InvertedIndex::load(std::istream& in, std::optional<Tokenizer> external) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("index file is empty");
  InvertedIndex index;
  std::size_t docs = 0;
  std::size_t terms = 0;
  try {
    const auto header = nlohmann::json::parse(line);
    if (header.at("format") != kIndexFormat) throw ParseError("not a BM25 index file");
    if (header.at("version") != 1) throw ParseError("unsupported BM25 index version");
    index.params_.k1 = parse_hex_double(header.at("k1").get<std::string>());
    index.params_.b = parse_hex_double(header.at("b").get<std::string>());
    const auto variant = parse_tokenizer_variant(header.at("tokenizer").get<std::string>());
    if (variant == TokenizerVariant::external) {
      if (!external || external->variant() != TokenizerVariant::external) {
        throw ConfigError("index uses the external tokenizer; a token table must be supplied");
      }
      index.tokenizer_ = *external;
    } else {
      index.tokenizer_ = Tokenizer(variant);
    }
    docs = header.at("docs").get<std::size_t>();
    terms = header.at("terms").get<std::size_t>();

    index.doc_ids_.reserve(docs);
    for (std::size_t i = 0; i < docs; ++i) {
      if (!std::getline(in, line)) throw ParseError("truncated document table");
      const auto row = nlohmann::json::parse(line);
      if (row.at(0) != "d") throw ParseError("expected document row");
      index.doc_ids_.push_back(row.at(1).get<std::string>());
      index.doc_len_.push_back(row.at(2).get<std::uint32_t>());
    }
    for (std::size_t i = 0; i < terms; ++i) {
      if (!std::getline(in, line)) throw ParseError("truncated term table");
      const auto row = nlohmann::json::parse(line);
      if (row.at(0) != "t") throw ParseError("expected term row");
      const auto& flat = row.at(2);
      if (flat.size() % 2 != 0 || flat.empty()) throw ParseError("bad posting list");
      std::vector<Posting> list;
      for (std::size_t j = 0; j < flat.size(); j += 2) {
        const Posting p{flat[j].get<std::uint32_t>(), flat[j + 1].get<std::uint32_t>()};
        if (p.doc >= docs || p.tf == 0) throw ParseError("posting out of range");
        if (!list.empty() && list.back().doc >= p.doc) throw ParseError("postings not sorted");
        list.push_back(p);
      }
      index.postings_.emplace(row.at(1).get<std::string>(), std::move(list));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed BM25 index: ") + e.what());
  }
  index.params_.validate();
  index.finalize();
  return index;
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path,
                                  std::optional<Tokenizer> external) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open index file " + path.string());
  return load(in, std::move(external));
}

InvertedIndex build_index(const Corpus& corpus, const Tokenizer& tokenizer, Bm25Params params) {
  return InvertedIndex::build(corpus, tokenizer, params);
}

double idf(const InvertedIndex& index, std::string_view term) { return index.idf(term); }

double bm25_score(const InvertedIndex& index, std::span<const std::string> query_tokens,
                  std::string_view paragraph_id) {
  return index.score(query_tokens, paragraph_id);
}

ScoredList search_bm25(const InvertedIndex& index, std::string_view query_text, std::size_t k) {
  return index.search(query_text, k);
}

}  // namespace hybrid
