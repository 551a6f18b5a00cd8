#include <cmath>
#include <fstream>

#include <json.hpp>

#include "summ/text.hpp"

namespace summ::text {

std::vector<RawPair> ingest_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open corpus file " + path.string());
  std::vector<RawPair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(where + "invalid JSON or encoding (" + e.what() + ")");
    }
    if (!record.is_object()) throw FormatError(where + "record is not a JSON object");
    RawPair pair;
    for (auto [field, target] : {std::pair{"article", &pair.article}, std::pair{"summary", &pair.summary}}) {
      auto it = record.find(field);
      if (it == record.end()) throw FormatError(where + "missing field \"" + field + "\"");
      if (!it->is_string()) throw FormatError(where + "field \"" + field + "\" is not a string");
      *target = it->get<std::string>();
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

void write_jsonl(const std::filesystem::path& path, std::span<const RawPair> pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write corpus file " + path.string());
  for (const RawPair& p : pairs) {
    out << nlohmann::json{{"article", p.article}, {"summary", p.summary}}.dump() << '\n';
  }
}

CorpusSplit split_corpus(std::span<const RawPair> pairs, SplitFractions f, std::uint64_t seed) {
  if (!(f.train > 0 && f.dev > 0 && f.test > 0)) {
    throw std::invalid_argument("split fractions must all be positive");
  }
  if (std::abs(f.train + f.dev + f.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must sum to 1");
  }
  const std::size_t n = pairs.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const auto n_dev = static_cast<std::size_t>(std::llround(static_cast<double>(n) * f.dev));
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * f.test));
  const std::size_t held = std::min(n, n_dev + n_test);
  const std::size_t n_train = n - held;

  CorpusSplit split;
  for (std::size_t i = 0; i < n; ++i) {
    const RawPair& p = pairs[order[i]];
    if (i < n_train) {
      split.train.push_back(p);
    } else if (i < n_train + std::min(n_dev, n - n_train)) {
      split.dev.push_back(p);
    } else {
      split.test.push_back(p);
    }
  }
  return split;
}

}  // namespace summ::text
