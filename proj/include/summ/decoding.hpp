#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "summ/summarizer.hpp"
#include "summ/text.hpp"

namespace summ::decode {

struct DecodeConfig {
  std::size_t beam_size = 4;
  std::size_t min_length = 2;   // STOP is not allowed before this many tokens
  std::size_t max_length = 100; // emitted tokens, STOP included
  double length_alpha = 0.0;

  void validate() const;
};

struct Hypothesis {
  std::vector<int> tokens;  // extended ids, STOP included when finished
  double log_prob = 0.0;
  std::vector<std::vector<double>> attention;
  model::DecoderStepState state;
  bool finished = false;

  /// log_prob / len^alpha; an empty hypothesis scores its raw log-probability.
  double score(double alpha) const;
};

/// Higher score first, then the lexicographically smaller id sequence.
bool better(const Hypothesis& a, const Hypothesis& b, double alpha);

Hypothesis greedy_decode(const model::DecodeSession& session, const DecodeConfig& config);
Hypothesis beam_search(const model::DecodeSession& session, const DecodeConfig& config);

Hypothesis greedy_decode(const model::Summarizer& model, const text::EncodedPair& pair, const DecodeConfig& config);
Hypothesis beam_search(const model::Summarizer& model, const text::EncodedPair& pair, const DecodeConfig& config);

/// Drops a trailing STOP.
std::vector<int> strip_stop(std::span<const int> ids);

/// ids >= |vocab| become article_oovs[id - |vocab|]; UNK renders as "[UNK]".
text::Tokens map_extended_tokens(std::span<const int> ids, const text::Vocabulary& vocab,
                                 std::span<const text::Token> article_oovs);

struct SummaryRecord {
  std::size_t article_idx = 0;
  std::string summary;
  double score = 0.0;
};

void write_summaries(const std::filesystem::path& path, std::span<const SummaryRecord> records);
std::vector<SummaryRecord> read_summaries(const std::filesystem::path& path);

}  // namespace summ::decode
