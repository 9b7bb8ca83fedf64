#include "dblp/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "dblp/errors.hpp"

namespace dblp {

const std::vector<std::string>& Vocabulary::special_tokens() {
  static const std::vector<std::string> specials{"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
  return specials;
}

Vocabulary::Vocabulary() : Vocabulary(special_tokens()) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  const auto& specials = special_tokens();
  if (tokens_.size() < kNumSpecial ||
      !std::equal(specials.begin(), specials.end(), tokens_.begin())) {
    throw DataError("vocabulary must start with [PAD], [UNK], [CLS], [SEP]");
  }
  index_.reserve(tokens_.size());
  for (std::size_t id = 0; id < tokens_.size(); ++id) {
    const std::string& tok = tokens_[id];
    if (tok.empty() || tok.find_first_of("\r\n") != std::string::npos) {
      throw DataError("vocabulary line " + std::to_string(id) + " holds an invalid token");
    }
    if (!index_.emplace(tok, id).second) {
      throw DataError("duplicate vocabulary token '" + tok + "' at line " + std::to_string(id));
    }
  }
}

std::optional<std::size_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token(std::size_t id) const {
  if (id >= tokens_.size()) throw LookupError("token id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::string Vocabulary::to_text() const {
  std::string out;
  for (const auto& tok : tokens_) {
    out += tok;
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::from_text(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      tokens.emplace_back(text.substr(pos));
      break;
    }
    tokens.emplace_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return Vocabulary(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary file " + path.string());
  const std::string text = to_text();
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("failed writing vocabulary file " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read vocabulary file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

std::uint64_t Vocabulary::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& tok : tokens_) {
    for (unsigned char c : tok) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= static_cast<unsigned char>('\n');
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> pre_tokenize(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      words.emplace_back(1, ch);
    } else {
      current += c < 0x80 ? static_cast<char>(std::tolower(c)) : ch;
    }
  }
  flush();
  return words;
}

bool is_clause_separator(std::string_view word) {
  return word.size() == 1 && std::string_view(".,;?!:").find(word[0]) != std::string_view::npos;
}

Vocabulary build_vocab(std::span<const std::string> corpus, std::size_t max_size,
                       std::size_t min_freq) {
  if (corpus.empty()) throw DataError("build_vocab: empty corpus");
  if (max_size < Vocabulary::kNumSpecial) {
    throw ConfigError("build_vocab: max_size must leave room for the special tokens");
  }
  if (min_freq < 1) throw ConfigError("build_vocab: min_freq must be at least 1");

  std::map<std::string, std::size_t> counts;
  for (const auto& text : corpus) {
    for (auto& w : pre_tokenize(text)) ++counts[w];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // counts is ordered lexicographically, so a stable sort keeps that order on ties.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> tokens = Vocabulary::special_tokens();
  std::vector<std::string> admitted;
  for (const auto& [word, count] : ranked) {
    if (tokens.size() >= max_size) break;
    if (count < min_freq) break;
    tokens.push_back(word);
    admitted.push_back(word);
  }
  std::unordered_map<std::string, bool> present;
  for (const auto& t : tokens) present.emplace(t, true);
  for (const auto& word : admitted) {
    if (word.size() <= 4) continue;
    for (std::size_t len = 2; len <= 4; ++len) {
      if (tokens.size() >= max_size) break;
      std::string piece = "##" + word.substr(word.size() - len);
      if (present.emplace(piece, true).second) tokens.push_back(std::move(piece));
    }
  }
  Vocabulary vocab(std::move(tokens));
  vocab.max_size = max_size;
  vocab.min_freq = min_freq;
  return vocab;
}

std::vector<std::size_t> wordpiece(std::string_view word, const Vocabulary& vocab) {
  std::vector<std::size_t> pieces;
  std::size_t start = 0;
  std::string candidate;
  while (start < word.size()) {
    std::size_t end = word.size();
    std::optional<std::size_t> match;
    while (end > start) {
      candidate.assign(start > 0 ? "##" : "");
      candidate.append(word.substr(start, end - start));
      if ((match = vocab.find(candidate))) break;
      --end;
    }
    if (!match) return {Vocabulary::kUnk};
    pieces.push_back(*match);
    start = end;
  }
  return pieces;
}

TokenizedText tokenize(std::string_view text, const Vocabulary& vocab, std::size_t max_len) {
  if (max_len < 3) throw ConfigError("tokenize: max_len must be at least 3");
  TokenizedText out;
  out.ids.push_back(Vocabulary::kCls);
  out.word_of.push_back(TokenizedText::kNoWord);
  const auto words = pre_tokenize(text);
  for (std::size_t w = 0; w < words.size(); ++w) {
    for (std::size_t id : wordpiece(words[w], vocab)) {
      out.ids.push_back(id);
      out.word_of.push_back(w);
    }
  }
  if (out.ids.size() > max_len - 1) {
    out.ids.resize(max_len - 1);
    out.word_of.resize(max_len - 1);
  }
  out.ids.push_back(Vocabulary::kSep);
  out.word_of.push_back(TokenizedText::kNoWord);
  out.mask.assign(out.ids.size(), 1);
  return out;
}

TokenizedText split_clauses(TokenizedText tokens, std::string_view original_text) {
  const auto words = pre_tokenize(original_text);
  tokens.clause_spans.clear();
  constexpr std::size_t kClosed = static_cast<std::size_t>(-1);
  std::size_t open = kClosed;
  bool has_content = false;
  for (std::size_t i = 0; i < tokens.ids.size(); ++i) {
    const std::size_t w = tokens.word_of.empty() ? TokenizedText::kNoWord : tokens.word_of[i];
    if (w == TokenizedText::kNoWord || (i < tokens.mask.size() && tokens.mask[i] == 0)) continue;
    if (open == kClosed) {
      open = i;
      has_content = false;
    }
    const bool separator = w < words.size() && is_clause_separator(words[w]);
    if (!separator) {
      has_content = true;
      continue;
    }
    if (has_content) tokens.clause_spans.push_back({open, i + 1});
    open = kClosed;
  }
  if (open != kClosed && has_content) {
    std::size_t end = open;
    for (std::size_t i = open; i < tokens.ids.size(); ++i) {
      if (tokens.word_of[i] != TokenizedText::kNoWord) end = i + 1;
    }
    tokens.clause_spans.push_back({open, end});
  }
  return tokens;
}

TokenizedText prepare_text(std::string_view text, const Vocabulary& vocab, std::size_t max_len) {
  return split_clauses(tokenize(text, vocab, max_len), text);
}

EncodedBatch encode_batch(std::span<const TokenizedText* const> items, std::size_t max_len) {
  if (items.empty()) throw ContractError("encode_batch: no items");
  if (max_len < 3) throw ConfigError("encode_batch: max_len must be at least 3");
  EncodedBatch out;
  out.batch = items.size();
  for (const TokenizedText* item : items) out.seq = std::max(out.seq, item->ids.size());
  out.seq = std::min(out.seq, max_len);
  out.ids.assign(out.batch * out.seq, Vocabulary::kPad);
  out.mask.assign(out.batch * out.seq, 0);
  out.clause_spans.resize(out.batch);
  for (std::size_t b = 0; b < out.batch; ++b) {
    const TokenizedText& item = *items[b];
    const std::size_t n = std::min(item.ids.size(), out.seq);
    for (std::size_t i = 0; i < n; ++i) {
      out.ids[b * out.seq + i] = item.ids[i];
      out.mask[b * out.seq + i] = item.mask.empty() ? 1 : item.mask[i];
    }
    std::size_t content_end = n;
    if (item.ids.size() > out.seq) {
      out.ids[b * out.seq + n - 1] = Vocabulary::kSep;
      content_end = n - 1;
    }
    for (const TokenSpan& span : item.clause_spans) {
      const TokenSpan clipped{span.begin, std::min(span.end, content_end)};
      if (clipped.begin < clipped.end) out.clause_spans[b].push_back(clipped);
    }
  }
  return out;
}

EncodedBatch encode_batch(std::span<const TokenizedText> items, std::size_t max_len) {
  std::vector<const TokenizedText*> ptrs;
  ptrs.reserve(items.size());
  for (const auto& item : items) ptrs.push_back(&item);
  return encode_batch(std::span<const TokenizedText* const>(ptrs), max_len);
}

}  // namespace dblp
