#pragma once

// WordPiece-style tokenization, vocabulary construction, clause
// segmentation and padded batch encoding.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dblp {

/// Token table with four fixed special ids. Continuation pieces carry a
/// "##" prefix and are only ever matched word-internally.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kCls = 2;
  static constexpr std::size_t kSep = 3;
  static constexpr std::size_t kNumSpecial = 4;

  static const std::vector<std::string>& special_tokens();

  /// Specials only.
  Vocabulary();
  /// Tokens in id order; the first four must be the specials and no token
  /// may repeat or contain a line break.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  std::optional<std::size_t> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  const std::string& token(std::size_t id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Build-time settings; informational only and not part of the file format.
  std::size_t max_size = 0;
  std::size_t min_freq = 0;

  /// One token per line, each line terminated by '\n'.
  std::string to_text() const;
  static Vocabulary from_text(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  /// 64-bit FNV-1a digest of to_text().
  std::uint64_t digest() const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Half-open token index range [begin, end).
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const TokenSpan&) const = default;
};

struct TokenizedText {
  static constexpr std::size_t kNoWord = static_cast<std::size_t>(-1);

  std::vector<std::size_t> ids;       // [CLS] … [SEP]
  std::vector<std::uint8_t> mask;     // 1 on real tokens
  std::vector<TokenSpan> clause_spans;
  /// Index of the source word (in pre_tokenize order) each token came
  /// from; kNoWord for specials.
  std::vector<std::size_t> word_of;
};

/// Lowercases and splits on whitespace; every ASCII punctuation character
/// becomes its own word.
std::vector<std::string> pre_tokenize(std::string_view text);

/// True for the characters that end a clause: . , ; ? ! :
bool is_clause_separator(std::string_view word);

Vocabulary build_vocab(std::span<const std::string> corpus, std::size_t max_size,
                       std::size_t min_freq = 1);

/// Greedy longest-match-first segmentation of one word. Returns {kUnk}
/// when some remainder cannot be matched.
std::vector<std::size_t> wordpiece(std::string_view word, const Vocabulary& vocab);

TokenizedText tokenize(std::string_view text, const Vocabulary& vocab, std::size_t max_len = 128);

/// Populates clause_spans. A clause is a run of tokens closed by a
/// separator token (which it includes) or by the end of the text. Runs
/// holding no non-separator token are dropped, so text made only of
/// punctuation has zero clauses.
TokenizedText split_clauses(TokenizedText tokens, std::string_view original_text);

/// tokenize followed by split_clauses.
TokenizedText prepare_text(std::string_view text, const Vocabulary& vocab,
                           std::size_t max_len = 128);

struct EncodedBatch {
  std::size_t batch = 0;
  std::size_t seq = 0;
  std::vector<std::size_t> ids;      // batch×seq, row-major
  std::vector<std::uint8_t> mask;    // batch×seq
  std::vector<std::vector<TokenSpan>> clause_spans;

  std::span<const std::size_t> row_ids(std::size_t item) const {
    return std::span(ids).subspan(item * seq, seq);
  }
  std::span<const std::uint8_t> row_mask(std::size_t item) const {
    return std::span(mask).subspan(item * seq, seq);
  }
};

/// Right-pads with [PAD] to the longest item, capped at max_len. Rows
/// longer than the cap are cut and end with [SEP]; clause spans are
/// clipped to the surviving content positions.
EncodedBatch encode_batch(std::span<const TokenizedText> items, std::size_t max_len = 128);
EncodedBatch encode_batch(std::span<const TokenizedText* const> items, std::size_t max_len = 128);

}  // namespace dblp
