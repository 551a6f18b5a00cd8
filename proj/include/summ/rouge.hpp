#pragma once

#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "summ/text.hpp"

namespace summ::rouge {

using Ngram = std::vector<text::Token>;

struct NgramCounts {
  std::size_t n = 1;
  std::map<Ngram, std::size_t> counts;

  std::size_t total() const noexcept;
};

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static RougeScore from(double precision, double recall);
};

NgramCounts ngram_counts(std::span<const text::Token> tokens, std::size_t n);

/// Clipped n-gram overlap over reference (recall) and system (precision) totals.
RougeScore rouge_n(std::span<const text::Token> system, std::span<const text::Token> reference, std::size_t n);

std::size_t lcs_length(std::span<const text::Token> x, std::span<const text::Token> y);

/// Summary-level LCS over the whole token sequences.
RougeScore rouge_l(std::span<const text::Token> system, std::span<const text::Token> reference);

struct PairScores {
  RougeScore r1, r2, rl;
};

struct RougeReport {
  std::vector<PairScores> pairs;
  PairScores corpus;
};

struct ScoredPair {
  text::Tokens system;
  text::Tokens reference;
};

RougeReport report(std::span<const ScoredPair> pairs);

/// Aligned table: one row per model with F1 / precision / recall in percent
/// for each of ROUGE-1, ROUGE-2, ROUGE-L.
void write_table(std::ostream& out, std::span<const std::pair<std::string, RougeReport>> rows);
/// CSV columns model,metric,f1,precision,recall with percent values.
void write_csv(std::ostream& out, std::span<const std::pair<std::string, RougeReport>> rows);

std::string percent(double value);

}  // namespace summ::rouge
