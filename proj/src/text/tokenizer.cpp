#include <array>

#include "summ/text.hpp"

namespace summ::text {
namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_alpha(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80; }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_word(unsigned char c) { return is_alpha(c) || is_digit(c); }

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

constexpr std::array<std::string_view, 6> kApostropheClitics{"'s", "'re", "'ve", "'ll", "'d", "'m"};

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

// Splits trailing clitics off a word, repeatedly, as long as a non-empty
// prefix ending in a word character remains.
void emit_word(std::string word, Tokens& out) {
  std::vector<std::string> suffixes;
  for (bool changed = true; changed;) {
    changed = false;
    auto try_split = [&](std::string_view clitic) {
      if (!ends_with(word, clitic) || word.size() == clitic.size()) return false;
      const unsigned char before = word[word.size() - clitic.size() - 1];
      if (!is_word(before)) return false;
      suffixes.emplace_back(clitic);
      word.resize(word.size() - clitic.size());
      return true;
    };
    if (try_split("n't")) {
      changed = true;
      continue;
    }
    for (std::string_view c : kApostropheClitics) {
      if (try_split(c)) {
        changed = true;
        break;
      }
    }
  }
  out.push_back(std::move(word));
  for (auto it = suffixes.rbegin(); it != suffixes.rend(); ++it) out.push_back(std::move(*it));
}

bool joins(std::string_view s, std::size_t j) {
  if (j == 0 || j + 1 >= s.size()) return false;
  const unsigned char prev = s[j - 1], next = s[j + 1];
  switch (s[j]) {
    case '-': return is_word(prev) && is_word(next);
    case '.':
    case ',': return is_digit(prev) && is_digit(next);
    case '\'': return is_alpha(prev) && is_alpha(next);
    default: return false;
  }
}

void tokenize_chunk(std::string_view s, Tokens& out) {
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = s[i];
    if (is_word(c)) {
      std::size_t j = i + 1;
      while (j < s.size() && (is_word(static_cast<unsigned char>(s[j])) || joins(s, j))) ++j;
      emit_word(std::string(s.substr(i, j - i)), out);
      i = j;
      continue;
    }
    if (c == '\'') {
      bool matched = false;
      for (std::string_view clitic : kApostropheClitics) {
        const std::size_t end = i + clitic.size();
        if (s.substr(i, clitic.size()) == clitic &&
            (end == s.size() || !is_word(static_cast<unsigned char>(s[end])))) {
          out.emplace_back(clitic);
          i = end;
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    out.emplace_back(1, static_cast<char>(c));
    ++i;
  }
}

}  // namespace

Tokens tokenize(std::string_view text) {
  std::string lowered(text.size(), '\0');
  for (std::size_t i = 0; i < text.size(); ++i) lowered[i] = lower(text[i]);
  Tokens out;
  std::size_t i = 0;
  while (i < lowered.size()) {
    while (i < lowered.size() && is_space(static_cast<unsigned char>(lowered[i]))) ++i;
    std::size_t j = i;
    while (j < lowered.size() && !is_space(static_cast<unsigned char>(lowered[j]))) ++j;
    if (j > i) tokenize_chunk(std::string_view(lowered).substr(i, j - i), out);
    i = j;
  }
  return out;
}

std::string join(std::span<const Token> tokens, char sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(sep);
    out += tokens[i];
  }
  return out;
}

std::vector<Tokens> split_sentences(std::span<const Token> tokens) {
  std::vector<Tokens> out;
  Tokens current;
  for (const Token& t : tokens) {
    current.push_back(t);
    if (t == "." || t == "!" || t == "?") {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

Segmented segment(std::string_view text) {
  Segmented seg;
  std::size_t start = 0;
  auto flush = [&](std::string_view para) {
    auto sentences = split_sentences(tokenize(para));
    if (sentences.empty()) return;
    if (!seg.sentences.empty()) seg.paragraph_breaks.push_back(seg.sentences.size());
    for (auto& s : sentences) seg.sentences.push_back(std::move(s));
  };
  // A blank line is a newline followed by optional spaces and another newline.
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '\n') {
      std::size_t j = i + 1;
      while (j < text.size() && (text[j] == ' ' || text[j] == '\t' || text[j] == '\r')) ++j;
      if (j < text.size() && text[j] == '\n') {
        flush(text.substr(start, i - start));
        while (j < text.size() && is_space(static_cast<unsigned char>(text[j]))) ++j;
        start = i = j;
        continue;
      }
    }
    ++i;
  }
  flush(text.substr(start));
  return seg;
}

Tokens add_markers(const std::vector<Tokens>& sentences, std::span<const std::size_t> paragraph_breaks) {
  std::vector<bool> breaks_after(sentences.size() + 1, false);
  for (std::size_t k : paragraph_breaks) {
    if (k == 0 || k >= sentences.size()) {
      throw std::out_of_range("paragraph break " + std::to_string(k) + " outside 1.." +
                              std::to_string(sentences.empty() ? 0 : sentences.size() - 1));
    }
    breaks_after[k] = true;
  }
  const auto specials = Vocabulary::special_tokens();
  const Token s_open(specials[Vocabulary::kSentOpen]), s_close(specials[Vocabulary::kSentClose]);
  const Token p_open(specials[Vocabulary::kParaOpen]), p_close(specials[Vocabulary::kParaClose]);
  Tokens out;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (sentences[i].empty()) throw std::invalid_argument("sentence " + std::to_string(i) + " is empty");
    if (i == 0 || breaks_after[i]) {
      if (i > 0) out.push_back(p_close);
      out.push_back(p_open);
    }
    out.push_back(s_open);
    out.insert(out.end(), sentences[i].begin(), sentences[i].end());
    out.push_back(s_close);
  }
  if (!sentences.empty()) out.push_back(p_close);
  return out;
}

Tokens prepare(std::string_view text, bool with_markers) {
  if (!with_markers) return tokenize(text);
  Segmented seg = segment(text);
  return add_markers(seg.sentences, seg.paragraph_breaks);
}

}  // namespace summ::text
