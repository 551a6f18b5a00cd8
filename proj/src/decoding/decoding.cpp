#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "summ/decoding.hpp"

namespace summ::decode {
namespace {

using text::Vocabulary;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void suppress_early_stop(std::vector<double>& log_probs, std::size_t emitted, const DecodeConfig& config) {
  if (emitted < config.min_length && log_probs.size() > Vocabulary::kStop) log_probs[Vocabulary::kStop] = kNegInf;
}

Hypothesis extend(const Hypothesis& parent, int token, double log_prob, const model::StepOutput& out) {
  Hypothesis h;
  h.tokens = parent.tokens;
  h.tokens.push_back(token);
  h.log_prob = parent.log_prob + log_prob;
  h.attention = parent.attention;
  if (!out.next.attention.empty()) h.attention.push_back(out.next.attention);
  h.state = out.next;
  h.finished = token == Vocabulary::kStop;
  return h;
}

// Indices of the k largest entries, ties to the smaller index; -inf entries skipped.
std::vector<int> top_k(const std::vector<double>& v, std::size_t k) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto cmp = [&](int a, int b) { return v[a] != v[b] ? v[a] > v[b] : a < b; };
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), cmp);
  idx.resize(k);
  std::erase_if(idx, [&](int i) { return v[i] == kNegInf; });
  return idx;
}

}  // namespace

void DecodeConfig::validate() const {
  if (beam_size < 1) throw std::invalid_argument("beam size must be at least 1");
  if (max_length < 1) throw std::invalid_argument("max length must be at least 1");
  if (min_length > max_length) {
    throw std::invalid_argument("min length " + std::to_string(min_length) + " exceeds max length " +
                                std::to_string(max_length));
  }
}

double Hypothesis::score(double alpha) const {
  if (tokens.empty() || alpha == 0.0) return log_prob;
  return log_prob / std::pow(static_cast<double>(tokens.size()), alpha);
}

bool better(const Hypothesis& a, const Hypothesis& b, double alpha) {
  const double sa = a.score(alpha), sb = b.score(alpha);
  if (sa != sb) return sa > sb;
  return std::lexicographical_compare(a.tokens.begin(), a.tokens.end(), b.tokens.begin(), b.tokens.end());
}

Hypothesis greedy_decode(const model::DecodeSession& session, const DecodeConfig& config) {
  config.validate();
  Hypothesis hyp;
  hyp.state = session.initial();
  int prev = Vocabulary::kStart;
  for (std::size_t t = 0; t < config.max_length; ++t) {
    model::StepOutput out = session.step(hyp.state, prev);
    suppress_early_stop(out.log_probs, t, config);
    const std::vector<int> best = top_k(out.log_probs, 1);
    if (best.empty()) break;
    hyp = extend(hyp, best.front(), out.log_probs[best.front()], out);
    prev = best.front();
    if (hyp.finished) break;
  }
  return hyp;
}

Hypothesis beam_search(const model::DecodeSession& session, const DecodeConfig& config) {
  config.validate();
  const double alpha = config.length_alpha;
  const auto order = [alpha](const Hypothesis& a, const Hypothesis& b) { return better(a, b, alpha); };

  Hypothesis root;
  root.state = session.initial();
  std::vector<Hypothesis> alive{root};
  std::vector<Hypothesis> finished;

  for (std::size_t t = 0; t < config.max_length && !alive.empty(); ++t) {
    std::vector<Hypothesis> candidates;
    for (const Hypothesis& h : alive) {
      model::StepOutput out = session.step(h.state, h.tokens.empty() ? Vocabulary::kStart : h.tokens.back());
      suppress_early_stop(out.log_probs, t, config);
      // Per parent, beam_size + 1 options cover the best alive set plus STOP.
      for (int tok : top_k(out.log_probs, config.beam_size + 1)) {
        candidates.push_back(extend(h, tok, out.log_probs[tok], out));
      }
    }
    std::sort(candidates.begin(), candidates.end(), order);
    std::vector<Hypothesis> next;
    for (Hypothesis& c : candidates) {
      if (next.size() == config.beam_size) break;
      if (c.finished) {
        finished.push_back(std::move(c));
      } else {
        next.push_back(std::move(c));
      }
    }
    alive = std::move(next);
    if (finished.size() >= config.beam_size) break;
  }
  const std::vector<Hypothesis>& pool = finished.empty() ? alive : finished;
  if (pool.empty()) return root;
  return *std::min_element(pool.begin(), pool.end(), order);
}

Hypothesis greedy_decode(const model::Summarizer& model, const text::EncodedPair& pair, const DecodeConfig& config) {
  return greedy_decode(*model.begin(pair), config);
}

Hypothesis beam_search(const model::Summarizer& model, const text::EncodedPair& pair, const DecodeConfig& config) {
  return beam_search(*model.begin(pair), config);
}

std::vector<int> strip_stop(std::span<const int> ids) {
  std::vector<int> out(ids.begin(), ids.end());
  if (!out.empty() && out.back() == Vocabulary::kStop) out.pop_back();
  return out;
}

text::Tokens map_extended_tokens(std::span<const int> ids, const text::Vocabulary& vocab,
                                 std::span<const text::Token> article_oovs) {
  return text::decode_extended(ids, vocab, article_oovs);
}

void write_summaries(const std::filesystem::path& path, std::span<const SummaryRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const SummaryRecord& r : records) {
    nlohmann::ordered_json j;
    j["article_idx"] = r.article_idx;
    j["summary"] = r.summary;
    j["score"] = r.score;
    out << j.dump() << '\n';
  }
}

std::vector<SummaryRecord> read_summaries(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<SummaryRecord> records;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      records.push_back({j.at("article_idx").get<std::size_t>(), j.at("summary").get<std::string>(),
                         j.value("score", 0.0)});
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace summ::decode
