#include "hybrid/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <unordered_set>

#include <json.hpp>
#include <unicode/uchar.h>
#include <unicode/uscript.h>

#include "hybrid/error.hpp"
#include "hybrid/tokenizer.hpp"

namespace hybrid {

std::string_view to_string(Language language) {
  switch (language) {
    case Language::english: return "english";
    case Language::cjk: return "cjk";
    case Language::other: return "other";
  }
  return "other";
}

Language parse_language(std::string_view name) {
  if (name == "english") return Language::english;
  if (name == "cjk") return Language::cjk;
  if (name == "other") return Language::other;
  throw ConfigError("unknown language tag '" + std::string(name) + "'");
}

Corpus::Corpus(std::vector<Paragraph> paragraphs, std::vector<QueryRecord> queries,
               Language language)
    : paragraphs_(std::move(paragraphs)), queries_(std::move(queries)), language_(language) {
  by_id_.reserve(paragraphs_.size());
  for (size_t i = 0; i < paragraphs_.size(); ++i) {
    const auto& p = paragraphs_[i];
    if (p.text.empty()) throw ContractViolation("paragraph '" + p.id + "' has empty text");
    if (!by_id_.emplace(p.id, i).second) {
      throw DuplicateIdError("duplicate paragraph id '" + p.id + "'");
    }
  }
  std::unordered_set<std::string_view> query_ids;
  for (const auto& q : queries_) {
    if (q.text.empty()) throw ContractViolation("query '" + q.id + "' has empty text");
    if (!query_ids.insert(q.id).second) {
      throw DuplicateIdError("duplicate query id '" + q.id + "'");
    }
    if (!by_id_.contains(q.gold_paragraph_id)) {
      throw ContractViolation("query '" + q.id + "' references missing paragraph '" +
                              q.gold_paragraph_id + "'");
    }
  }
}

const Paragraph* Corpus::find(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &paragraphs_[it->second];
}

const Paragraph& Corpus::paragraph(std::string_view id) const {
  if (const auto* p = find(id)) return *p;
  throw NotFoundError("unknown paragraph id '" + std::string(id) + "'");
}

std::vector<std::string> Corpus::article_ids() const {
  std::vector<std::string> out;
  std::unordered_set<std::string_view> seen;
  for (const auto& p : paragraphs_) {
    if (seen.insert(p.article_id).second) out.push_back(p.article_id);
  }
  return out;
}

bool Corpus::operator==(const Corpus& other) const {
  return language_ == other.language_ && paragraphs_ == other.paragraphs_ &&
         queries_ == other.queries_;
}

Language detect_language(const std::vector<Paragraph>& paragraphs) {
  size_t letters = 0;
  size_t cjk = 0;
  size_t latin = 0;
  for (const auto& p : paragraphs) {
    for (char32_t cp : unicode::decode_utf8(p.text)) {
      if (!u_isalpha(static_cast<UChar32>(cp))) continue;
      ++letters;
      if (unicode::is_cjk(cp)) {
        ++cjk;
      } else {
        UErrorCode status = U_ZERO_ERROR;
        if (uscript_getScript(static_cast<UChar32>(cp), &status) == USCRIPT_LATIN) ++latin;
      }
    }
  }
  if (letters == 0) return Language::english;
  if (2 * cjk > letters) return Language::cjk;
  if (2 * latin > letters) return Language::english;
  return Language::other;
}

namespace {

// Unbiased draw in [0, bound) by rejection; the library distributions are
// implementation-defined, mt19937_64 itself is not.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

}  // namespace

std::vector<std::string> article_permutation(const Corpus& corpus, std::uint64_t seed) {
  auto articles = corpus.article_ids();
  std::mt19937_64 rng(seed);
  for (size_t i = articles.size(); i > 1; --i) {
    const auto j = static_cast<size_t>(uniform_below(rng, i));
    std::swap(articles[i - 1], articles[j]);
  }
  return articles;
}

Corpus sample_corpus(const Corpus& corpus, std::size_t max_questions, std::uint64_t seed) {
  if (max_questions == 0) throw ConfigError("max_questions must be at least 1");

  std::unordered_map<std::string, size_t> questions_per_article;
  for (const auto& q : corpus.queries()) {
    ++questions_per_article[corpus.paragraph(q.gold_paragraph_id).article_id];
  }

  std::unordered_set<std::string> admitted;
  size_t total = 0;
  for (const auto& article : article_permutation(corpus, seed)) {
    const size_t n = questions_per_article[article];
    if (total + n > max_questions) break;
    total += n;
    admitted.insert(article);
  }

  std::vector<Paragraph> paragraphs;
  for (const auto& p : corpus.paragraphs()) {
    if (admitted.contains(p.article_id)) paragraphs.push_back(p);
  }
  std::vector<QueryRecord> queries;
  for (const auto& q : corpus.queries()) {
    if (admitted.contains(corpus.paragraph(q.gold_paragraph_id).article_id)) queries.push_back(q);
  }
  return Corpus(std::move(paragraphs), std::move(queries), corpus.language());
}

// Native format: one JSON object per line, a corpus header first, then
// paragraphs, then queries.
void write_corpus(const Corpus& corpus, std::ostream& out) {
  nlohmann::ordered_json header;
  header["kind"] = "corpus";
  header["format"] = "hybrid-corpus";
  header["version"] = 1;
  header["language"] = to_string(corpus.language());
  out << header.dump() << '\n';
  for (const auto& p : corpus.paragraphs()) {
    nlohmann::ordered_json record;
    record["kind"] = "paragraph";
    record["id"] = p.id;
    record["article_id"] = p.article_id;
    record["text"] = p.text;
    out << record.dump() << '\n';
  }
  for (const auto& q : corpus.queries()) {
    nlohmann::ordered_json record;
    record["kind"] = "query";
    record["id"] = q.id;
    record["text"] = q.text;
    record["gold_paragraph_id"] = q.gold_paragraph_id;
    out << record.dump() << '\n';
  }
}

Corpus read_corpus(std::istream& in, std::string_view origin) {
  std::vector<Paragraph> paragraphs;
  std::vector<QueryRecord> queries;
  Language language = Language::english;
  bool seen_header = false;
  std::string line;
  size_t line_no = 0;
  const auto where = [&] { return std::string(origin) + ":" + std::to_string(line_no); };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
      const auto kind = record.at("kind").get<std::string>();
      if (kind == "corpus") {
        if (record.value("version", 0) != 1) throw ParseError(where() + ": unsupported version");
        language = parse_language(record.at("language").get<std::string>());
        seen_header = true;
      } else if (kind == "paragraph") {
        if (!queries.empty()) throw ParseError(where() + ": paragraph record after queries");
        paragraphs.push_back({record.at("id").get<std::string>(),
                              record.at("article_id").get<std::string>(),
                              record.at("text").get<std::string>()});
      } else if (kind == "query") {
        queries.push_back({record.at("id").get<std::string>(), record.at("text").get<std::string>(),
                           record.at("gold_paragraph_id").get<std::string>()});
      } else {
        throw ParseError(where() + ": unknown record kind '" + kind + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where() + ": " + e.what());
    }
  }
  if (!seen_header && line_no > 0) throw ParseError(std::string(origin) + ": missing corpus header");
  return Corpus(std::move(paragraphs), std::move(queries), language);
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus file " + path.string());
  write_corpus(corpus, out);
  if (!out) throw IoError("failed writing corpus file " + path.string());
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file " + path.string());
  return read_corpus(in, path.string());
}

}  // namespace hybrid
