#include <algorithm>
#include <cstdio>
#include <iomanip>

#include "summ/rouge.hpp"

namespace summ::rouge {

std::size_t NgramCounts::total() const noexcept {
  std::size_t t = 0;
  for (const auto& [gram, c] : counts) t += c;
  return t;
}

RougeScore RougeScore::from(double precision, double recall) {
  const double denom = precision + recall;
  return {precision, recall, denom > 0.0 ? 2.0 * precision * recall / denom : 0.0};
}

NgramCounts ngram_counts(std::span<const text::Token> tokens, std::size_t n) {
  if (n < 1) throw std::invalid_argument("n-gram order must be at least 1");
  NgramCounts out;
  out.n = n;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++out.counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                       tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

RougeScore rouge_n(std::span<const text::Token> system, std::span<const text::Token> reference, std::size_t n) {
  const NgramCounts sys = ngram_counts(system, n);
  const NgramCounts ref = ngram_counts(reference, n);
  std::size_t overlap = 0;
  for (const auto& [gram, c] : sys.counts) {
    const auto it = ref.counts.find(gram);
    if (it != ref.counts.end()) overlap += std::min(c, it->second);
  }
  const std::size_t sys_total = sys.total(), ref_total = ref.total();
  const double p = sys_total ? static_cast<double>(overlap) / static_cast<double>(sys_total) : 0.0;
  const double r = ref_total ? static_cast<double>(overlap) / static_cast<double>(ref_total) : 0.0;
  return RougeScore::from(p, r);
}

std::size_t lcs_length(std::span<const text::Token> x, std::span<const text::Token> y) {
  std::vector<std::size_t> prev(y.size() + 1, 0), cur(y.size() + 1, 0);
  for (std::size_t i = 1; i <= x.size(); ++i) {
    for (std::size_t j = 1; j <= y.size(); ++j) {
      cur[j] = x[i - 1] == y[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[y.size()];
}

RougeScore rouge_l(std::span<const text::Token> system, std::span<const text::Token> reference) {
  const double lcs = static_cast<double>(lcs_length(system, reference));
  const double p = system.empty() ? 0.0 : lcs / static_cast<double>(system.size());
  const double r = reference.empty() ? 0.0 : lcs / static_cast<double>(reference.size());
  return RougeScore::from(p, r);
}

RougeReport report(std::span<const ScoredPair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("ROUGE report over zero pairs");
  RougeReport rep;
  const auto accumulate = [](RougeScore& acc, const RougeScore& s) {
    acc.precision += s.precision;
    acc.recall += s.recall;
    acc.f1 += s.f1;
  };
  for (const ScoredPair& p : pairs) {
    PairScores s{rouge_n(p.system, p.reference, 1), rouge_n(p.system, p.reference, 2),
                 rouge_l(p.system, p.reference)};
    accumulate(rep.corpus.r1, s.r1);
    accumulate(rep.corpus.r2, s.r2);
    accumulate(rep.corpus.rl, s.rl);
    rep.pairs.push_back(s);
  }
  const double n = static_cast<double>(pairs.size());
  for (RougeScore* s : {&rep.corpus.r1, &rep.corpus.r2, &rep.corpus.rl}) {
    s->precision /= n;
    s->recall /= n;
    s->f1 /= n;
  }
  return rep;
}

std::string percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", value * 100.0);
  return buf;
}

void write_table(std::ostream& out, std::span<const std::pair<std::string, RougeReport>> rows) {
  std::size_t name_width = 5;
  for (const auto& [name, rep] : rows) name_width = std::max(name_width, name.size());
  const auto cell = [](const RougeScore& s) {
    return percent(s.f1) + " / " + percent(s.precision) + " / " + percent(s.recall);
  };
  out << std::left << std::setw(static_cast<int>(name_width)) << "model";
  for (const char* h : {"ROUGE-1 (F1 / P / R)", "ROUGE-2 (F1 / P / R)", "ROUGE-L (F1 / P / R)"}) {
    out << "  " << std::setw(23) << h;
  }
  out << '\n';
  for (const auto& [name, rep] : rows) {
    out << std::setw(static_cast<int>(name_width)) << name;
    for (const RougeScore* s : {&rep.corpus.r1, &rep.corpus.r2, &rep.corpus.rl}) {
      out << "  " << std::setw(23) << cell(*s);
    }
    out << '\n';
  }
}

void write_csv(std::ostream& out, std::span<const std::pair<std::string, RougeReport>> rows) {
  out << "model,metric,f1,precision,recall\n";
  for (const auto& [name, rep] : rows) {
    const std::pair<const char*, const RougeScore*> metrics[] = {
        {"rouge-1", &rep.corpus.r1}, {"rouge-2", &rep.corpus.r2}, {"rouge-l", &rep.corpus.rl}};
    for (const auto& [metric, s] : metrics) {
      out << name << ',' << metric << ',' << percent(s->f1) << ',' << percent(s->precision) << ','
          << percent(s->recall) << '\n';
    }
  }
}

}  // namespace summ::rouge
