#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "hybrid/corpus.hpp"
#include "hybrid/error.hpp"

namespace hybrid {

namespace {

using nlohmann::json;

// Walks the SQuAD v1.1 layout: {"data": [{"title", "paragraphs": [{"context",
// "qas": [{"id", "question", "answers"}]}]}]}. DRCD adds optional "id" fields
// on articles and paragraphs, which are honoured when present.
class SquadWalker {
 public:
  explicit SquadWalker(std::string_view origin) : origin_(origin) {}

  const json& field(const json& node, const char* key, const std::string& path) const {
    if (!node.is_object()) fail(path, "expected an object");
    const auto it = node.find(key);
    if (it == node.end()) fail(path + "." + key, "missing field");
    return *it;
  }

  std::string string_field(const json& node, const char* key, const std::string& path) const {
    const auto& value = field(node, key, path);
    if (!value.is_string()) fail(path + "." + key, "expected a string");
    auto s = value.get<std::string>();
    if (s.empty()) fail(path + "." + key, "empty string");
    return s;
  }

  const json& array_field(const json& node, const char* key, const std::string& path) const {
    const auto& value = field(node, key, path);
    if (!value.is_array()) fail(path + "." + key, "expected an array");
    return value;
  }

  std::optional<std::string> optional_id(const json& node) const {
    const auto it = node.find("id");
    if (it == node.end()) return std::nullopt;
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
    return std::nullopt;
  }

  [[noreturn]] void fail(const std::string& path, const std::string& message) const {
    throw ParseError(std::string(origin_) + ": " + path + ": " + message);
  }

 private:
  std::string_view origin_;
};

}  // namespace

Corpus parse_squad_format(std::string_view document, std::string_view origin,
                          std::optional<Language> language) {
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(origin) + ": " + e.what());
  }

  SquadWalker walk(origin);
  std::vector<Paragraph> paragraphs;
  std::vector<QueryRecord> queries;
  std::unordered_set<std::string> paragraph_ids;
  std::unordered_set<std::string> query_ids;

  const auto& data = walk.array_field(root, "data", "$");
  for (size_t ai = 0; ai < data.size(); ++ai) {
    const std::string article_path = "data[" + std::to_string(ai) + "]";
    const auto& article = data[ai];
    if (!article.is_object()) walk.fail(article_path, "expected an object");
    const auto article_id = walk.optional_id(article).value_or("a" + std::to_string(ai));

    const auto& paras = walk.array_field(article, "paragraphs", article_path);
    for (size_t pi = 0; pi < paras.size(); ++pi) {
      const std::string para_path = article_path + ".paragraphs[" + std::to_string(pi) + "]";
      const auto& para = paras[pi];
      auto para_id = walk.optional_id(para).value_or("a" + std::to_string(ai) + ":p" +
                                                     std::to_string(pi));
      if (!paragraph_ids.insert(para_id).second) {
        throw DuplicateIdError(std::string(origin) + ": " + para_path + ": duplicate paragraph id '" +
                               para_id + "'");
      }
      paragraphs.push_back({para_id, article_id, walk.string_field(para, "context", para_path)});

      const auto& qas = walk.array_field(para, "qas", para_path);
      for (size_t qi = 0; qi < qas.size(); ++qi) {
        const std::string qa_path = para_path + ".qas[" + std::to_string(qi) + "]";
        const auto& qa = qas[qi];
        if (!qa.is_object()) walk.fail(qa_path, "expected an object");
        auto query_id = walk.optional_id(qa);
        if (!query_id) walk.fail(qa_path + ".id", "missing or non-scalar id");
        if (!query_ids.insert(*query_id).second) {
          throw DuplicateIdError(std::string(origin) + ": " + qa_path + ": duplicate query id '" +
                                 *query_id + "'");
        }
        queries.push_back({*query_id, walk.string_field(qa, "question", qa_path), para_id});
      }
    }
  }

  const Language lang = language.value_or(detect_language(paragraphs));
  return Corpus(std::move(paragraphs), std::move(queries), lang);
}

Corpus load_squad_format(const std::filesystem::path& path, std::optional<Language> language) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_squad_format(buffer.str(), path.string(), language);
}

}  // namespace hybrid
