#include "hybrid/tokenizer.hpp"

#include <fstream>

#include <json.hpp>
#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/utf8.h>

#include "hybrid/error.hpp"

namespace hybrid {

namespace unicode {

bool is_cjk(char32_t cp) {
  UErrorCode status = U_ZERO_ERROR;
  const UScriptCode script = uscript_getScript(static_cast<UChar32>(cp), &status);
  if (U_FAILURE(status)) return false;
  return script == USCRIPT_HAN || script == USCRIPT_HIRAGANA || script == USCRIPT_KATAKANA ||
         script == USCRIPT_HANGUL;
}

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c = 0;
    U8_NEXT(bytes, i, length, c);
    out.push_back(c < 0 ? U'�' : static_cast<char32_t>(c));
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  uint8_t buf[U8_MAX_LENGTH];
  int32_t n = 0;
  UBool error = false;
  U8_APPEND(buf, n, U8_MAX_LENGTH, static_cast<UChar32>(cp), error);
  if (error) return;
  out.append(reinterpret_cast<const char*>(buf), static_cast<size_t>(n));
}

}  // namespace unicode

namespace {

bool starts_word(char32_t cp) { return u_isalnum(static_cast<UChar32>(cp)); }

// Combining marks extend a run but never start one.
bool continues_word(char32_t cp) {
  if (starts_word(cp)) return true;
  const auto type = u_charType(static_cast<UChar32>(cp));
  return type == U_NON_SPACING_MARK || type == U_COMBINING_SPACING_MARK ||
         type == U_ENCLOSING_MARK;
}

void word_lower(std::u32string_view text, std::vector<std::string>& out) {
  std::string current;
  bool in_word = false;
  for (char32_t cp : text) {
    if (in_word ? continues_word(cp) : starts_word(cp)) {
      in_word = true;
      unicode::append_utf8(current, static_cast<char32_t>(
                                        u_foldCase(static_cast<UChar32>(cp), U_FOLD_CASE_DEFAULT)));
    } else if (in_word) {
      out.push_back(std::move(current));
      current.clear();
      in_word = false;
    }
  }
  if (in_word) out.push_back(std::move(current));
}

void cjk_run(std::u32string_view run, std::vector<std::string>& out) {
  if (run.size() == 1) {
    std::string token;
    unicode::append_utf8(token, run[0]);
    out.push_back(std::move(token));
    return;
  }
  for (size_t i = 0; i + 1 < run.size(); ++i) {
    std::string token;
    unicode::append_utf8(token, run[i]);
    unicode::append_utf8(token, run[i + 1]);
    out.push_back(std::move(token));
  }
}

void cjk_bigram(std::u32string_view text, std::vector<std::string>& out) {
  size_t i = 0;
  while (i < text.size()) {
    const bool cjk = unicode::is_cjk(text[i]);
    size_t j = i + 1;
    while (j < text.size() && unicode::is_cjk(text[j]) == cjk) ++j;
    if (cjk) {
      cjk_run(text.substr(i, j - i), out);
    } else {
      word_lower(text.substr(i, j - i), out);
    }
    i = j;
  }
}

}  // namespace

std::string_view to_string(TokenizerVariant variant) {
  switch (variant) {
    case TokenizerVariant::word_lower: return "word_lower";
    case TokenizerVariant::cjk_bigram: return "cjk_bigram";
    case TokenizerVariant::external: return "external";
  }
  return "unknown";
}

TokenizerVariant parse_tokenizer_variant(std::string_view name) {
  if (name == "word_lower") return TokenizerVariant::word_lower;
  if (name == "cjk_bigram") return TokenizerVariant::cjk_bigram;
  if (name == "external") return TokenizerVariant::external;
  throw ConfigError("unknown tokenizer variant '" + std::string(name) + "'");
}

Tokenizer::Tokenizer(TokenizerVariant variant) : variant_(variant) {}

Tokenizer Tokenizer::external(TokenTable table) {
  Tokenizer t(TokenizerVariant::external);
  t.table_ = std::make_shared<const TokenTable>(std::move(table));
  return t;
}

Tokenizer Tokenizer::load_external(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open token table " + path.string());
  TokenTable table;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto record = nlohmann::json::parse(line);
      table[record.at("text").get<std::string>()] =
          record.at("tokens").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return external(std::move(table));
}

std::vector<std::string> Tokenizer::operator()(std::string_view text) const {
  std::vector<std::string> out;
  if (text.empty()) return out;
  switch (variant_) {
    case TokenizerVariant::word_lower:
      word_lower(unicode::decode_utf8(text), out);
      break;
    case TokenizerVariant::cjk_bigram:
      cjk_bigram(unicode::decode_utf8(text), out);
      break;
    case TokenizerVariant::external: {
      if (!table_) throw ConfigError("external tokenizer has no token table");
      const auto it = table_->find(std::string(text));
      if (it == table_->end()) {
        throw ConfigError("external tokenizer has no tokens for text '" +
                          std::string(text.substr(0, 60)) + "'");
      }
      out = it->second;
      break;
    }
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text, const Tokenizer& tokenizer) {
  return tokenizer(text);
}

}  // namespace hybrid
