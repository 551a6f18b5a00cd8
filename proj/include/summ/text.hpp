#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "summ/common.hpp"

namespace summ::text {

/// Lowercase surface form without whitespace.
using Token = std::string;
using Tokens = std::vector<Token>;

/// Rule-based tokenizer:
///  - ASCII letters are lowercased; other bytes are kept as-is.
///  - Whitespace separates chunks and is never part of a token.
///  - A word is a run of letters, digits and non-ASCII bytes. It may contain
///    '-' between two alphanumerics, '.' or ',' between two digits, and '\''
///    between two letters.
///  - Clitics split off the end of a word: 's 're 've 'll 'd 'm and n't.
///    A bare clitic ("'s") stays one token.
///  - Every other ASCII character is a single-character token.
Tokens tokenize(std::string_view text);

std::string join(std::span<const Token> tokens, char sep = ' ');

/// Sentences end after ".", "!" or "?" tokens; a trailing unterminated run is
/// its own sentence.
std::vector<Tokens> split_sentences(std::span<const Token> tokens);

/// Splits raw text into paragraphs at blank lines, then tokenizes and splits
/// each paragraph into sentences. Break positions are in add_markers() form.
struct Segmented {
  std::vector<Tokens> sentences;
  std::vector<std::size_t> paragraph_breaks;
};
Segmented segment(std::string_view text);

/// Wraps each sentence in <s> </s> and each paragraph in <p> </p>. Every value
/// k in `paragraph_breaks` starts a new paragraph after the first k sentences;
/// valid values are 1..sentences.size()-1. Sentences must be non-empty.
Tokens add_markers(const std::vector<Tokens>& sentences, std::span<const std::size_t> paragraph_breaks);

/// Tokenizes raw text, optionally with paragraph/sentence markers.
Tokens prepare(std::string_view text, bool with_markers);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kStart = 2;
  static constexpr int kStop = 3;
  static constexpr int kSentOpen = 4;
  static constexpr int kSentClose = 5;
  static constexpr int kParaOpen = 6;
  static constexpr int kParaClose = 7;
  static constexpr std::size_t kNumSpecials = 8;

  static std::span<const std::string_view> special_tokens();

  /// Specials first, then tokens by descending frequency with lexicographic
  /// ties, truncated to `max_size` entries overall.
  static Vocabulary build(std::span<const Tokens> corpus, std::size_t max_size);
  static Vocabulary from_counts(std::vector<std::pair<Token, std::uint64_t>> counts, std::size_t max_size);

  /// Reads "token<TAB>count" lines (ids follow the implicit specials).
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t max_size() const noexcept { return max_size_; }
  bool contains(std::string_view token) const;
  // UNK for unknown tokens.
  int id(std::string_view token) const;
  const Token& token(int id) const;
  std::uint64_t count(int id) const;
  /// Stable content hash over the ordered token list.
  std::uint64_t hash() const noexcept;

 private:
  Vocabulary() = default;
  void insert(Token token, std::uint64_t count);

  std::vector<Token> tokens_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<Token, int> index_;
  std::size_t max_size_ = 0;
};

/// Source/target ids for one pair, with per-article temporary ids for the
/// article's out-of-vocabulary tokens so they can be copied.
struct EncodedPair {
  std::vector<int> article_ids;
  std::vector<int> article_ext_ids;
  std::vector<Token> article_oovs;
  std::vector<int> summary_ids;
  std::vector<int> summary_ext_ids;

  std::size_t extended_size(std::size_t vocab_size) const noexcept { return vocab_size + article_oovs.size(); }
};

EncodedPair encode_pair(std::span<const Token> article, std::span<const Token> summary, const Vocabulary& vocab);

/// Maps extended ids back to surface tokens; UNK renders as "[UNK]".
Tokens decode_extended(std::span<const int> ids, const Vocabulary& vocab, std::span<const Token> article_oovs);

struct RawPair {
  std::string article;
  std::string summary;
};

/// One JSON object per line with string fields "article" and "summary".
/// Blank lines are skipped. Errors name the 1-based line number.
std::vector<RawPair> ingest_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, std::span<const RawPair> pairs);

struct SplitFractions {
  double train = 0.92;
  double dev = 0.042;
  double test = 0.038;
};

struct CorpusSplit {
  std::vector<RawPair> train;
  std::vector<RawPair> dev;
  std::vector<RawPair> test;
};

/// Seeded shuffle, then dev and test sizes round to nearest and train takes
/// the remainder.
CorpusSplit split_corpus(std::span<const RawPair> pairs, SplitFractions fractions, std::uint64_t seed);

}  // namespace summ::text
