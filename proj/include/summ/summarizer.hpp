#pragma once

// The four summarization models behind one interface: teacher-forced loss for
// training and a step-wise decode session for greedy and beam search.

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "summ/gradcheck.hpp"
#include "summ/params.hpp"
#include "summ/pointer.hpp"
#include "summ/seq2seq.hpp"
#include "summ/text.hpp"
#include "summ/transformer.hpp"

namespace summ::model {

enum class ModelKind { Baseline, Pointer, PointerCoverage, Transformer };

std::string_view model_name(ModelKind kind) noexcept;
/// Accepts "baseline", "pointer", "pointer-coverage", "transformer".
ModelKind parse_model_kind(std::string_view name);
bool uses_copy(ModelKind kind) noexcept;

struct SummarizerConfig {
  ModelKind kind = ModelKind::Pointer;
  std::size_t vocab_size = 0;
  // Recurrent models.
  std::size_t embedding_dim = 32;
  std::size_t hidden_size = 64;
  std::size_t attention_size = 64;
  std::size_t projection_size = 64;
  // Transformer; its vocab_size mirrors the field above.
  TransformerConfig transformer;

  void validate() const;
  std::string to_json() const;
  static SummarizerConfig from_json(std::string_view text);
};

/// Per-step decoder state. Recurrent models fill `lstm` and, with coverage,
/// `coverage`; the transformer keeps its decoder input prefix.
struct DecoderStepState {
  LstmState lstm;
  ag::Tensor coverage;
  std::vector<int> prefix;
  std::vector<double> attention;
  double p_gen = 1.0;
};

struct StepOutput {
  std::vector<double> log_probs;  // over the extended vocabulary
  DecoderStepState next;
};

/// Inference over one encoded article. Runs with gradient recording off.
class DecodeSession {
 public:
  virtual ~DecodeSession() = default;
  virtual std::size_t vocab_size() const = 0;
  virtual std::size_t extended_size() const = 0;
  virtual DecoderStepState initial() const = 0;
  /// `prev_token` is START at the first step; extended ids are fed back as UNK.
  virtual StepOutput step(const DecoderStepState& state, int prev_token) const = 0;
};

class Summarizer {
 public:
  virtual ~Summarizer() = default;

  const SummarizerConfig& config() const noexcept { return config_; }
  ModelKind kind() const noexcept { return config_.kind; }
  std::size_t vocab_size() const noexcept { return config_.vocab_size; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

  /// Only meaningful for pointer-coverage; other kinds ignore it.
  void set_coverage_active(bool on) noexcept { coverage_active_ = on && config_.kind == ModelKind::PointerCoverage; }
  bool coverage_active() const noexcept { return coverage_active_; }

  /// Teacher-forced mean loss over the summary followed by STOP.
  virtual ag::Tensor loss(const text::EncodedPair& pair) const = 0;
  virtual std::unique_ptr<DecodeSession> begin(const text::EncodedPair& pair) const = 0;

 protected:
  explicit Summarizer(SummarizerConfig config) : config_(std::move(config)) {}

  SummarizerConfig config_;
  ParamStore params_;
  bool coverage_active_ = false;
};

/// Parameters are drawn from `seed`. Pointer-coverage starts with coverage off.
std::unique_ptr<Summarizer> make_summarizer(const SummarizerConfig& config, std::uint64_t seed);

/// Decoder targets: summary (extended ids for copy models, plain ids
/// otherwise) followed by STOP.
std::vector<int> decoder_targets(const text::EncodedPair& pair, ModelKind kind);
/// Decoder inputs: START followed by the plain summary ids.
std::vector<int> decoder_inputs(const text::EncodedPair& pair);

/// Small sizes for tests and gradient checks: hidden 8 (transformer: one
/// layer, d_model 8, two heads).
SummarizerConfig toy_config(ModelKind kind, std::size_t vocab_size);

/// Two hand-built pairs over a 12-token vocabulary, one with two OOVs.
std::vector<text::EncodedPair> toy_pairs();

/// End-to-end loss gradient checks over all parameters, one per model kind;
/// pointer-coverage runs with coverage on.
std::vector<ag::GradCase> model_grad_cases(std::uint64_t seed = 99);

}  // namespace summ::model
