#pragma once

// Bidirectional-LSTM encoder, LSTM decoder step pieces, additive attention
// and the vocabulary distribution of the attentional baseline summarizer.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "summ/autograd.hpp"
#include "summ/params.hpp"

namespace summ::model {

/// Probability floor applied before taking logs in the NLL.
inline constexpr double kProbFloor = 1e-12;

/// Fused gate weights: rows [input | forget | output | candidate], each
/// hidden_size tall, over the concatenated [x, h] input.
struct LstmCell {
  ag::Tensor weight;  // (4h, input + h)
  ag::Tensor bias;    // (4h), forget block initialized to 1
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;

  static LstmCell create(ParamStore& store, const std::string& prefix, std::size_t input_size,
                         std::size_t hidden_size, Rng& rng);
};

struct LstmState {
  ag::Tensor h;
  ag::Tensor c;

  static LstmState zeros(std::size_t hidden_size);
};

/// i,f,o = sigmoid(W_{i,f,o}[x,h] + b), g = tanh(W_g[x,h] + b_g),
/// c' = f*c + i*g, h' = o*tanh(c').
LstmState lstm_step(const LstmCell& cell, const ag::Tensor& x, const LstmState& prev);

struct EncoderParams {
  ag::Tensor embedding;  // (V, E), shared with the decoder input
  LstmCell forward;
  LstmCell backward;
  // Linear maps from [final forward; final backward] to the decoder start state.
  ag::Tensor init_h_weight, init_h_bias;
  ag::Tensor init_c_weight, init_c_bias;
};

struct EncoderStates {
  ag::Tensor states;  // (n, 2h): row i is [forward_i ; backward_i]
  std::vector<ag::Tensor> forward_h;
  std::vector<ag::Tensor> backward_h;  // indexed by source position
  LstmState decoder_init;

  std::size_t length() const { return forward_h.size(); }
};

EncoderStates encode(std::span<const int> article_ids, const EncoderParams& params);

/// Parameters of e_i = v^T tanh(W_h h_i + W_s s_t + w_c c_i + b_attn).
struct AttentionParams {
  ag::Tensor enc_weight;       // W_h (a, 2h)
  ag::Tensor dec_weight;       // W_s (a, h)
  ag::Tensor bias;             // b_attn (a)
  ag::Tensor v;                // (a)
  ag::Tensor coverage_weight;  // w_c (a); undefined unless the model has coverage
};

struct Attention {
  ag::Tensor scores;   // e_t (n)
  ag::Tensor weights;  // a_t (n)
};

/// W_h h_i for every source position, (n, a). Independent of the decoder step,
/// so it is computed once per article.
ag::Tensor attention_features(const ag::Tensor& enc_states, const AttentionParams& params);

/// `coverage`, when given, must hold one entry per source position.
Attention attention_scores(const ag::Tensor& enc_features, const ag::Tensor& dec_state,
                           const AttentionParams& params, const ag::Tensor* coverage = nullptr);

/// h*_t = sum_i a_t[i] h_i
ag::Tensor context_vector(const ag::Tensor& weights, const ag::Tensor& enc_states);

struct OutputProjection {
  ag::Tensor hidden_weight;  // V  (p, h + 2h)
  ag::Tensor hidden_bias;    // b  (p)
  ag::Tensor vocab_weight;   // V' (|vocab|, p)
  ag::Tensor vocab_bias;     // b' (|vocab|)
};

/// softmax(V'(V[s_t, h*_t] + b) + b')
ag::Tensor vocab_distribution(const ag::Tensor& dec_state, const ag::Tensor& context, const OutputProjection& proj);

/// -log(max(p[target], kProbFloor))
ag::Tensor step_loss(const ag::Tensor& probs, int target);

/// Arithmetic mean of per-step losses.
ag::Tensor sequence_loss(const std::vector<ag::Tensor>& step_losses);

}  // namespace summ::model
