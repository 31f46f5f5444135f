#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hybrid {

enum class TokenizerVariant {
  word_lower,  // maximal alphanumeric runs, simple case folding
  cjk_bigram,  // overlapping bigrams over CJK runs, word_lower elsewhere
  external,    // token lists supplied per text
};

std::string_view to_string(TokenizerVariant variant);
TokenizerVariant parse_tokenizer_variant(std::string_view name);

using TokenTable = std::unordered_map<std::string, std::vector<std::string>>;

/// Pure text-to-token mapping. Cheap to copy; the external table is shared.
class Tokenizer {
 public:
  explicit Tokenizer(TokenizerVariant variant = TokenizerVariant::word_lower);

  static Tokenizer external(TokenTable table);
  /// Reads line-delimited {"text": ..., "tokens": [...]} records.
  static Tokenizer load_external(const std::filesystem::path& path);

  TokenizerVariant variant() const noexcept { return variant_; }

  /// Throws ConfigError for the external variant when `text` has no entry.
  std::vector<std::string> operator()(std::string_view text) const;

 private:
  TokenizerVariant variant_;
  std::shared_ptr<const TokenTable> table_;
};

std::vector<std::string> tokenize(std::string_view text, const Tokenizer& tokenizer);

namespace unicode {

/// True for code points in the Han, Hiragana, Katakana or Hangul scripts.
bool is_cjk(char32_t cp);

/// Decodes UTF-8, mapping ill-formed sequences to U+FFFD.
std::u32string decode_utf8(std::string_view text);
void append_utf8(std::string& out, char32_t cp);

}  // namespace unicode

}  // namespace hybrid
