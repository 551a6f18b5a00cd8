#pragma once

// Binary fake/real news classifier: embedding, (Bi-)LSTM, dropout, dense
// sigmoid head. Feature variants feed it the body, the headline or a
// generated summary of the body.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "summ/decoding.hpp"
#include "summ/params.hpp"
#include "summ/seq2seq.hpp"
#include "summ/text.hpp"
#include "summ/training.hpp"

namespace summ::news {

/// label: 1 = fake, 0 = real.
struct NewsRecord {
  std::string headline;
  std::string body;
  int label = 0;
};

/// Header "headline,body,label"; RFC 4180 quoting.
std::vector<NewsRecord> read_news_csv(const std::filesystem::path& path);
void write_news_csv(const std::filesystem::path& path, std::span<const NewsRecord> records);

/// Balanced synthetic corpus. Each class draws from its own word
/// distribution over a shared filler pool and carries class marker phrases
/// in the headline and the first sentence of the body.
std::vector<NewsRecord> synthetic_news(std::size_t count, std::uint64_t seed);

enum class FeatureVariant { Body, Headline, Summary };
std::string_view variant_name(FeatureVariant v) noexcept;
FeatureVariant parse_variant(std::string_view name);

struct Example {
  text::Tokens tokens;
  int label = 0;
};

using BodySummarizer = std::function<text::Tokens(const NewsRecord&)>;

/// The summary variant requires `summarizer`.
std::vector<Example> build_features(std::span<const NewsRecord> records, FeatureVariant variant,
                                    const BodySummarizer* summarizer = nullptr);

/// Beam-search summaries of the body with a frozen model, rendered without
/// sentence and paragraph markers.
BodySummarizer model_summarizer(std::shared_ptr<const model::Summarizer> model,
                                std::shared_ptr<const text::Vocabulary> vocab, decode::DecodeConfig decode,
                                bool with_markers);

struct LeadSummarizerOptions {
  std::size_t iterations = 400;
  std::size_t vocab_size = 1000;
  std::size_t hidden_size = 32;
  std::uint64_t seed = 1;
  decode::DecodeConfig decode{4, 2, 20, 0.0};
};

/// Trains a pointer-generator on (body, first body sentence) pairs and wraps it
/// with model_summarizer.
BodySummarizer train_lead_summarizer(std::span<const NewsRecord> records, const LeadSummarizerOptions& options);

enum class CellKind { Lstm, BiLstm };
std::string_view cell_name(CellKind c) noexcept;

struct ClassifierConfig {
  CellKind cell = CellKind::Lstm;
  std::size_t hidden_size = 64;
  double dropout = 0.2;
  std::size_t embedding_dim = 32;
  std::size_t max_length = 200;
  std::size_t max_vocab = 5000;
  std::size_t epochs = 5;
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;
  train::AdagradConfig adagrad{0.1, 0.1, 1e-10};
  double clip_norm = 2.0;

  void validate() const;
};

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;  // positive = fake

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  double accuracy() const noexcept;
};

struct EvalResult {
  Confusion matrix;
  double accuracy = 0.0;
  double loss = 0.0;  // mean binary cross-entropy
};

class Classifier {
 public:
  Classifier(const ClassifierConfig& config, text::Vocabulary vocab);

  const ClassifierConfig& config() const noexcept { return config_; }
  const text::Vocabulary& vocabulary() const noexcept { return vocab_; }
  model::ParamStore& params() noexcept { return params_; }
  const model::ParamStore& params() const noexcept { return params_; }

  /// Logit of P(fake). `dropout_rng` non-null enables dropout.
  ag::Tensor logit(std::span<const text::Token> tokens, Rng* dropout_rng) const;
  /// Binary cross-entropy of one example.
  ag::Tensor loss(const Example& example, Rng* dropout_rng) const;
  double probability(std::span<const text::Token> tokens) const;

 private:
  ClassifierConfig config_;
  text::Vocabulary vocab_;
  model::ParamStore params_;
  ag::Tensor embedding_;
  model::LstmCell forward_, backward_;
  ag::Tensor dense_w_, dense_b_;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double valid_loss = 0.0;
  double valid_acc = 0.0;
};

/// Needs at least two examples of each class. `curve`, when given, receives
/// one row per epoch; validation columns are zero without `valid`.
Classifier train_classifier(std::span<const Example> train, const ClassifierConfig& config,
                            std::span<const Example> valid = {}, std::vector<EpochStats>* curve = nullptr);

/// Threshold 0.5; does not modify the classifier.
EvalResult evaluate(const Classifier& classifier, std::span<const Example> examples);

/// Fold index per example: seeded shuffle, then position i goes to fold i mod k.
std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t k, std::uint64_t seed);
std::vector<EvalResult> kfold(std::span<const Example> examples, std::size_t k, const ClassifierConfig& config);

/// Seeded split into (train, valid) with `valid_fraction` of the examples held out.
std::pair<std::vector<Example>, std::vector<Example>> holdout_split(std::span<const Example> examples,
                                                                    double valid_fraction, std::uint64_t seed);

/// The eight cells x size x dropout settings, numbered 1..8.
std::vector<ClassifierConfig> grid_configs(const ClassifierConfig& base);

struct GridRow {
  std::string variant;
  std::size_t experiment = 0;
  ClassifierConfig config;
  EpochStats final;
  EvalResult valid;
};

void write_results_csv(std::ostream& out, std::span<const GridRow> rows);
/// Two-by-two matrix with actual classes as rows and predictions as columns.
void write_confusion(std::ostream& out, const std::string& title, const Confusion& m);

/// Mean token count per example.
double average_length(std::span<const Example> examples);

}  // namespace summ::news
