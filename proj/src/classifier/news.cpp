#include <array>
#include <fstream>
#include <iterator>
#include <sstream>

#include "summ/classifier.hpp"

namespace summ::news {
namespace {

constexpr std::array<std::string_view, 48> kFiller = {
    "the",   "a",      "city",   "people", "week",   "new",    "year",   "said",   "local",  "state",
    "time",  "group",  "public", "night",  "school", "report", "money",  "home",   "world",  "water",
    "last",  "today",  "plan",   "police", "family", "market", "health", "court",  "office", "party",
    "story", "street", "season", "team",   "power",  "rules",  "centre", "others", "video",  "photo",
    "voters", "prices", "online", "region", "friday", "monday", "house",  "leader"};
constexpr std::array<std::string_view, 12> kFakeWords = {"shocking", "secret",  "exposed", "hoax",
                                                         "outrage",  "miracle", "banned",  "leaked",
                                                         "insiders", "scandal", "truth",   "elites"};
constexpr std::array<std::string_view, 12> kRealWords = {"officials", "announced", "committee", "according",
                                                         "percent",   "quarterly", "ministry",  "agreement",
                                                         "statement", "analysts",  "budget",    "confirmed"};
constexpr std::array<std::string_view, 3> kFakeMarkers = {"sources reveal shocking truth", "what they hide from you",
                                                          "you will not believe this"};
constexpr std::array<std::string_view, 3> kRealMarkers = {"officials said on", "according to the report",
                                                          "in a statement released"};

std::string pick_word(Rng& rng, int label) {
  if (rng.uniform() < 0.3) {
    return std::string(label ? kFakeWords[rng.index(kFakeWords.size())] : kRealWords[rng.index(kRealWords.size())]);
  }
  return std::string(kFiller[rng.index(kFiller.size())]);
}

std::string capitalized(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string sentence(Rng& rng, int label, std::string lead, std::size_t words) {
  std::string s = std::move(lead);
  for (std::size_t i = 0; i < words; ++i) {
    if (!s.empty()) s += ' ';
    s += pick_word(rng, label);
  }
  return capitalized(s) + ".";
}

// RFC 4180 records; quoted fields may span lines.
std::vector<std::vector<std::string>> parse_csv(const std::string& text, const std::string& where) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t line = 1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = field_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (field_started || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      field_started = false;
      ++line;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw FormatError(where + ":" + std::to_string(line) + ": unterminated quoted field");
  if (field_started || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::vector<NewsRecord> read_news_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);
  const std::string where = path.string();
  const auto rows = parse_csv(text, where);
  if (rows.empty() || rows[0] != std::vector<std::string>{"headline", "body", "label"}) {
    throw FormatError(where + ": expected header headline,body,label");
  }
  std::vector<NewsRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string at = where + ": record " + std::to_string(r);
    if (row.size() != 3) throw FormatError(at + ": expected 3 fields, found " + std::to_string(row.size()));
    if (row[2] != "0" && row[2] != "1") throw FormatError(at + ": label must be 0 or 1, got '" + row[2] + "'");
    if (row[0].empty() && row[1].empty()) throw FormatError(at + ": headline and body are both empty");
    out.push_back({row[0], row[1], row[2] == "1" ? 1 : 0});
  }
  return out;
}

void write_news_csv(const std::filesystem::path& path, std::span<const NewsRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "headline,body,label\n";
  for (const NewsRecord& r : records) out << quote(r.headline) << ',' << quote(r.body) << ',' << r.label << '\n';
}

std::vector<NewsRecord> synthetic_news(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<NewsRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int label = static_cast<int>(i % 2);
    const auto& markers = label ? kFakeMarkers : kRealMarkers;
    NewsRecord r;
    r.label = label;
    r.headline = sentence(rng, label, std::string(markers[rng.index(markers.size())]), 3);
    r.headline.pop_back();
    std::string body = sentence(rng, label, std::string(markers[rng.index(markers.size())]), 4);
    for (int s = 0; s < 2; ++s) body += " " + sentence(rng, label, "", 6 + rng.index(3));
    r.body = std::move(body);
    out.push_back(std::move(r));
  }
  rng.shuffle(out);
  return out;
}

std::string_view variant_name(FeatureVariant v) noexcept {
  switch (v) {
    case FeatureVariant::Body: return "body";
    case FeatureVariant::Headline: return "headline";
    case FeatureVariant::Summary: return "summary";
  }
  return "unknown";
}

FeatureVariant parse_variant(std::string_view name) {
  for (FeatureVariant v : {FeatureVariant::Body, FeatureVariant::Headline, FeatureVariant::Summary}) {
    if (variant_name(v) == name) return v;
  }
  throw std::invalid_argument("unknown feature variant '" + std::string(name) +
                              "' (expected body, headline or summary)");
}

std::vector<Example> build_features(std::span<const NewsRecord> records, FeatureVariant variant,
                                    const BodySummarizer* summarizer) {
  if (variant == FeatureVariant::Summary && (summarizer == nullptr || !*summarizer)) {
    throw std::invalid_argument("the summary feature variant needs a summarizer");
  }
  std::vector<Example> out;
  out.reserve(records.size());
  for (const NewsRecord& r : records) {
    switch (variant) {
      case FeatureVariant::Body: out.push_back({text::tokenize(r.body), r.label}); break;
      case FeatureVariant::Headline: out.push_back({text::tokenize(r.headline), r.label}); break;
      case FeatureVariant::Summary: out.push_back({(*summarizer)(r), r.label}); break;
    }
  }
  return out;
}

double average_length(std::span<const Example> examples) {
  if (examples.empty()) return 0.0;
  std::size_t n = 0;
  for (const Example& e : examples) n += e.tokens.size();
  return static_cast<double>(n) / static_cast<double>(examples.size());
}

}  // namespace summ::news
