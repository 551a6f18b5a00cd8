#include <algorithm>
#include <array>
#include <fstream>
#include <map>

#include "summ/text.hpp"

namespace summ::text {
namespace {

constexpr std::array<std::string_view, Vocabulary::kNumSpecials> kSpecials{
    "[PAD]", "[UNK]", "[START]", "[STOP]", "<s>", "</s>", "<p>", "</p>",
};

bool is_special(std::string_view t) {
  return std::find(kSpecials.begin(), kSpecials.end(), t) != kSpecials.end();
}

}  // namespace

std::span<const std::string_view> Vocabulary::special_tokens() { return kSpecials; }

void Vocabulary::insert(Token token, std::uint64_t count) {
  const int id = static_cast<int>(tokens_.size());
  index_.emplace(token, id);
  tokens_.push_back(std::move(token));
  counts_.push_back(count);
}

Vocabulary Vocabulary::from_counts(std::vector<std::pair<Token, std::uint64_t>> counts, std::size_t max_size) {
  if (max_size <= kNumSpecials) {
    throw std::invalid_argument("vocabulary max_size " + std::to_string(max_size) + " must exceed the " +
                                std::to_string(kNumSpecials) + " special tokens");
  }
  std::erase_if(counts, [](const auto& kv) { return is_special(kv.first); });
  std::sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  v.max_size_ = max_size;
  for (std::string_view s : kSpecials) v.insert(Token(s), 0);
  for (auto& [token, count] : counts) {
    if (v.size() >= max_size) break;
    if (v.index_.count(token)) throw std::invalid_argument("duplicate vocabulary token '" + token + "'");
    v.insert(std::move(token), count);
  }
  return v;
}

Vocabulary Vocabulary::build(std::span<const Tokens> corpus, std::size_t max_size) {
  std::map<Token, std::uint64_t> freq;
  for (const Tokens& doc : corpus)
    for (const Token& t : doc) ++freq[t];
  std::vector<std::pair<Token, std::uint64_t>> counts(freq.begin(), freq.end());
  return from_counts(std::move(counts), max_size);
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open vocabulary file " + path.string());
  std::vector<std::pair<Token, std::uint64_t>> counts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected token<TAB>count");
    }
    std::uint64_t count = 0;
    try {
      std::size_t used = 0;
      count = std::stoull(line.substr(tab + 1), &used);
      if (used != line.size() - tab - 1) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad count");
    }
    counts.emplace_back(line.substr(0, tab), count);
  }
  // Keep file order: files are written by id, which may not match a re-sort
  // when counts were edited by hand.
  Vocabulary v;
  for (std::string_view s : kSpecials) v.insert(Token(s), 0);
  for (auto& [token, count] : counts) {
    if (is_special(token) || v.index_.count(token)) {
      throw FormatError(path.string() + ": duplicate or reserved token '" + token + "'");
    }
    v.insert(std::move(token), count);
  }
  v.max_size_ = std::max(v.size(), kNumSpecials + 1);
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write vocabulary file " + path.string());
  for (std::size_t i = kNumSpecials; i < tokens_.size(); ++i) out << tokens_[i] << '\t' << counts_[i] << '\n';
}

bool Vocabulary::contains(std::string_view token) const { return index_.count(Token(token)) > 0; }

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(Token(token));
  return it == index_.end() ? kUnk : it->second;
}

const Token& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("vocabulary id " + std::to_string(id) + " out of range");
  }
  return tokens_[id];
}

std::uint64_t Vocabulary::count(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= counts_.size()) {
    throw std::out_of_range("vocabulary id " + std::to_string(id) + " out of range");
  }
  return counts_[id];
}

std::uint64_t Vocabulary::hash() const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Token& t : tokens_) {
    h = fnv1a(t.data(), t.size(), h);
    const char sep = '\n';
    h = fnv1a(&sep, 1, h);
  }
  return h;
}

EncodedPair encode_pair(std::span<const Token> article, std::span<const Token> summary, const Vocabulary& vocab) {
  EncodedPair p;
  const int base = static_cast<int>(vocab.size());
  std::unordered_map<Token, int> oov_index;
  p.article_ids.reserve(article.size());
  p.article_ext_ids.reserve(article.size());
  for (const Token& t : article) {
    const int id = vocab.id(t);
    p.article_ids.push_back(id);
    if (id == Vocabulary::kUnk && !vocab.contains(t)) {
      auto [it, inserted] = oov_index.emplace(t, static_cast<int>(p.article_oovs.size()));
      if (inserted) p.article_oovs.push_back(t);
      p.article_ext_ids.push_back(base + it->second);
    } else {
      p.article_ext_ids.push_back(id);
    }
  }
  for (const Token& t : summary) {
    const int id = vocab.id(t);
    p.summary_ids.push_back(id);
    if (id == Vocabulary::kUnk && !vocab.contains(t)) {
      auto it = oov_index.find(t);
      p.summary_ext_ids.push_back(it == oov_index.end() ? Vocabulary::kUnk : base + it->second);
    } else {
      p.summary_ext_ids.push_back(id);
    }
  }
  return p;
}

Tokens decode_extended(std::span<const int> ids, const Vocabulary& vocab, std::span<const Token> article_oovs) {
  Tokens out;
  out.reserve(ids.size());
  const auto v = static_cast<int>(vocab.size());
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab.size() + article_oovs.size()) {
      throw std::out_of_range("extended id " + std::to_string(id) + " outside vocabulary of " +
                              std::to_string(vocab.size()) + " plus " + std::to_string(article_oovs.size()) +
                              " article OOVs");
    }
    out.push_back(id >= v ? article_oovs[id - v] : vocab.token(id));
  }
  return out;
}

}  // namespace summ::text
