#pragma once

// Encoder-decoder transformer: scaled dot-product and multi-head attention,
// sinusoidal positions, post-sublayer layer normalization.

#include <span>
#include <string>
#include <vector>

#include "summ/autograd.hpp"
#include "summ/params.hpp"

namespace summ::model {

struct TransformerConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t layers = 2;
  std::size_t ffn_size = 128;
  std::size_t max_length = 256;
  double norm_eps = 1e-6;

  std::size_t head_dim() const { return d_model / heads; }
  void validate() const;
};

/// Row-major boolean matrix; true means the query row may attend to the key column.
struct AttentionMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<bool> allowed;

  static AttentionMask causal(std::size_t n);
  static AttentionMask full(std::size_t rows, std::size_t cols);
  bool at(std::size_t r, std::size_t c) const { return allowed[r * cols + c]; }
};

/// softmax(Q K^T / sqrt(d_k)) V with disallowed positions excluded before the
/// softmax. Throws if some query row has no allowed key.
ag::Tensor scaled_dot_attention(const ag::Tensor& q, const ag::Tensor& k, const ag::Tensor& v,
                                const AttentionMask* mask = nullptr);

struct MultiHeadParams {
  std::vector<ag::Tensor> query;  // per head (d_model, d_k)
  std::vector<ag::Tensor> key;    // per head (d_model, d_k)
  std::vector<ag::Tensor> value;  // per head (d_model, d_v)
  ag::Tensor output;              // (heads * d_v, d_model)

  std::size_t heads() const { return query.size(); }
  static MultiHeadParams create(ParamStore& store, const std::string& prefix, std::size_t d_model,
                                std::size_t heads, Rng& rng);
};

/// Inputs are (len, d_model) matrices; heads run independently on their
/// projections and the concatenation is projected back to d_model.
ag::Tensor multi_head(const ag::Tensor& queries, const ag::Tensor& keys, const ag::Tensor& values,
                      const MultiHeadParams& params, const AttentionMask* mask = nullptr);

/// PE(pos, 2i) = sin(pos / 10000^(2i/d)), PE(pos, 2i+1) = cos(same), as a constant tensor.
ag::Tensor positional_encoding(std::size_t length, std::size_t d_model, std::size_t max_length);

struct LayerNormParams {
  ag::Tensor gamma;
  ag::Tensor beta;
};

struct FeedForwardParams {
  ag::Tensor w1, b1;  // (d_model, ffn), (ffn)
  ag::Tensor w2, b2;  // (ffn, d_model), (d_model)
};

struct EncoderLayerParams {
  MultiHeadParams self_attention;
  LayerNormParams norm1;
  FeedForwardParams ffn;
  LayerNormParams norm2;
};

struct DecoderLayerParams {
  MultiHeadParams self_attention;
  LayerNormParams norm1;
  MultiHeadParams cross_attention;
  LayerNormParams norm2;
  FeedForwardParams ffn;
  LayerNormParams norm3;
};

struct TransformerParams {
  ag::Tensor embedding;  // (V, d_model), shared by encoder and decoder inputs
  std::vector<EncoderLayerParams> encoder;
  std::vector<DecoderLayerParams> decoder;
  ag::Tensor out_weight;  // (d_model, V)
  ag::Tensor out_bias;    // (V)

  static TransformerParams create(ParamStore& store, const TransformerConfig& config, Rng& rng);
};

/// (len, d_model) representations z.
ag::Tensor encoder_forward(std::span<const int> ids, const TransformerConfig& config, const TransformerParams& params);

/// (target_len, V) logits; position t sees target positions <= t only.
ag::Tensor decoder_forward(std::span<const int> target_ids, const ag::Tensor& memory, const TransformerConfig& config,
                           const TransformerParams& params);

}  // namespace summ::model
