#pragma once

// Adagrad, the teacher-forced training loop, loss logging and checkpoints.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "summ/params.hpp"
#include "summ/summarizer.hpp"
#include "summ/text.hpp"

namespace summ::train {

struct AdagradConfig {
  double learning_rate = 0.15;
  double initial_accumulator = 0.1;
  double epsilon = 1e-10;
};

struct AdagradState {
  AdagradConfig config;
  std::vector<std::vector<double>> accumulators;  // one per parameter, store order

  static AdagradState create(const model::ParamStore& params, AdagradConfig config = {});
};

/// acc += g^2; theta -= lr * g / (sqrt(acc) + eps), elementwise.
void adagrad_step(std::span<double> theta, std::span<const double> grad, std::span<double> acc,
                  const AdagradConfig& config);
void adagrad_step(model::ParamStore& params, AdagradState& state);

/// Rescales all gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_grad_norm(model::ParamStore& params, double max_norm);

struct LossRow {
  std::size_t iteration = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
};

class LossLog {
 public:
  /// Iterations must strictly increase.
  void add(const LossRow& row);
  const std::vector<LossRow>& rows() const noexcept { return rows_; }
  void write_csv(std::ostream& out) const;
  void write_csv(const std::filesystem::path& path) const;

 private:
  std::vector<LossRow> rows_;
};

struct TrainConfig {
  std::size_t batch_size = 8;
  std::size_t max_iterations = 2000;
  std::size_t eval_interval = 100;
  // Coverage (pointer-coverage only) is on for zero-based iterations >= this.
  std::size_t cov_start_iteration = 0;
  std::uint64_t seed = 1;
  double clip_norm = 2.0;
  AdagradConfig adagrad;
  std::function<void(const LossRow&)> on_eval;
  // Ends training early when it returns true for an evaluation row.
  std::function<bool(const LossRow&)> stop_when;

  void validate() const;
};

/// Tokenizes with optional markers, truncates and encodes each pair.
std::vector<text::EncodedPair> prepare_pairs(std::span<const text::RawPair> pairs, const text::Vocabulary& vocab,
                                             bool with_markers, std::size_t max_article = 400,
                                             std::size_t max_summary = 100);

/// Mean teacher-forced loss without recording gradients.
double evaluate_loss(const model::Summarizer& model, std::span<const text::EncodedPair> pairs);

struct Checkpoint {
  model::SummarizerConfig config;
  bool coverage_active = false;
  std::uint64_t vocab_hash = 0;
  std::uint64_t iteration = 0;
  std::vector<std::string> names;
  std::vector<ag::Shape> shapes;
  std::vector<std::vector<double>> values;
  std::optional<AdagradState> optimizer;
  std::string metadata = "{}";  // JSON object carried verbatim, e.g. preprocessing settings
};

Checkpoint make_checkpoint(const model::Summarizer& model, std::uint64_t vocab_hash, std::uint64_t iteration,
                           const AdagradState* optimizer = nullptr);
/// Rebuilds the model described by the checkpoint and loads its tensors.
std::unique_ptr<model::Summarizer> instantiate(const Checkpoint& ckpt);

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

struct LoadExpectations {
  std::optional<model::ModelKind> kind;
  std::optional<std::uint64_t> vocab_hash;
};

/// Throws FormatError on truncation, corruption, version or expectation mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path, const LoadExpectations& expect = {});

struct TrainResult {
  LossLog log;
  Checkpoint best;  // parameters at the lowest validation loss
  std::size_t best_iteration = 0;
  double best_valid_loss = 0.0;
};

/// Trains `model` in place. Validation uses `dev`, or the training pairs when
/// `dev` is empty. Non-finite losses abort with the iteration number.
TrainResult train_loop(const TrainConfig& config, model::Summarizer& model, std::span<const text::EncodedPair> train,
                       std::span<const text::EncodedPair> dev, std::uint64_t vocab_hash);

}  // namespace summ::train
