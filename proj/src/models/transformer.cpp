#include <cmath>

#include "summ/transformer.hpp"

namespace summ::model {
namespace {

ag::Tensor embed_with_positions(std::span<const int> ids, const TransformerConfig& config,
                                const TransformerParams& params) {
  return ag::add(ag::embedding(params.embedding, ids),
                 positional_encoding(ids.size(), config.d_model, config.max_length));
}

ag::Tensor feed_forward(const ag::Tensor& x, const FeedForwardParams& p) {
  const ag::Tensor hidden = ag::relu(ag::add(ag::matmul(x, p.w1), p.b1));
  return ag::add(ag::matmul(hidden, p.w2), p.b2);
}

ag::Tensor add_norm(const ag::Tensor& x, const ag::Tensor& sublayer, const LayerNormParams& norm, double eps) {
  return ag::layer_norm(ag::add(x, sublayer), norm.gamma, norm.beta, eps);
}

LayerNormParams make_norm(ParamStore& store, const std::string& prefix, std::size_t d) {
  return {store.constant(prefix + ".gamma", {d}, 1.0), store.constant(prefix + ".beta", {d}, 0.0)};
}

FeedForwardParams make_ffn(ParamStore& store, const std::string& prefix, const TransformerConfig& c, Rng& rng) {
  FeedForwardParams f;
  f.w1 = store.uniform(prefix + ".w1", {c.d_model, c.ffn_size}, rng);
  f.b1 = store.constant(prefix + ".b1", {c.ffn_size});
  f.w2 = store.uniform(prefix + ".w2", {c.ffn_size, c.d_model}, rng);
  f.b2 = store.constant(prefix + ".b2", {c.d_model});
  return f;
}

}  // namespace

void TransformerConfig::validate() const {
  if (vocab_size == 0 || d_model == 0 || heads == 0 || ffn_size == 0 || max_length == 0) {
    throw std::invalid_argument("transformer sizes must be positive");
  }
  if (d_model % heads != 0) {
    throw std::invalid_argument("d_model " + std::to_string(d_model) + " is not divisible by " +
                                std::to_string(heads) + " heads");
  }
}

AttentionMask AttentionMask::causal(std::size_t n) {
  AttentionMask m{n, n, std::vector<bool>(n * n, false)};
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c <= r; ++c) m.allowed[r * n + c] = true;
  return m;
}

AttentionMask AttentionMask::full(std::size_t rows, std::size_t cols) {
  return {rows, cols, std::vector<bool>(rows * cols, true)};
}

ag::Tensor scaled_dot_attention(const ag::Tensor& q, const ag::Tensor& k, const ag::Tensor& v,
                                const AttentionMask* mask) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2 || q.dim(1) != k.dim(1) || k.dim(0) != v.dim(0)) {
    throw ShapeError("scaled_dot_attention: Q " + ag::shape_str(q.shape()) + ", K " + ag::shape_str(k.shape()) +
                     ", V " + ag::shape_str(v.shape()));
  }
  if (mask && (mask->rows != q.dim(0) || mask->cols != k.dim(0))) {
    throw ShapeError("attention mask is " + std::to_string(mask->rows) + "x" + std::to_string(mask->cols) +
                     " for " + std::to_string(q.dim(0)) + " queries and " + std::to_string(k.dim(0)) + " keys");
  }
  const double inv = 1.0 / std::sqrt(static_cast<double>(q.dim(1)));
  const ag::Tensor scores = ag::scale(ag::matmul(q, ag::transpose(k)), inv);
  return ag::matmul(ag::softmax(scores, mask ? &mask->allowed : nullptr), v);
}

MultiHeadParams MultiHeadParams::create(ParamStore& store, const std::string& prefix, std::size_t d_model,
                                        std::size_t heads, Rng& rng) {
  MultiHeadParams p;
  const std::size_t dk = d_model / heads;
  for (std::size_t h = 0; h < heads; ++h) {
    const std::string hp = prefix + ".head" + std::to_string(h);
    p.query.push_back(store.uniform(hp + ".query", {d_model, dk}, rng));
    p.key.push_back(store.uniform(hp + ".key", {d_model, dk}, rng));
    p.value.push_back(store.uniform(hp + ".value", {d_model, dk}, rng));
  }
  p.output = store.uniform(prefix + ".output", {heads * dk, d_model}, rng);
  return p;
}

ag::Tensor multi_head(const ag::Tensor& queries, const ag::Tensor& keys, const ag::Tensor& values,
                      const MultiHeadParams& params, const AttentionMask* mask) {
  if (params.heads() == 0) throw std::invalid_argument("multi_head needs at least one head");
  std::vector<ag::Tensor> heads;
  heads.reserve(params.heads());
  for (std::size_t h = 0; h < params.heads(); ++h) {
    heads.push_back(scaled_dot_attention(ag::matmul(queries, params.query[h]), ag::matmul(keys, params.key[h]),
                                         ag::matmul(values, params.value[h]), mask));
  }
  const ag::Tensor joined = heads.size() == 1 ? heads.front() : ag::concat(heads, 1);
  return ag::matmul(joined, params.output);
}

ag::Tensor positional_encoding(std::size_t length, std::size_t d_model, std::size_t max_length) {
  if (length > max_length) {
    throw std::length_error("sequence length " + std::to_string(length) + " exceeds maximum " +
                            std::to_string(max_length));
  }
  std::vector<double> pe(length * d_model);
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t j = 0; j < d_model; ++j) {
      const double exponent = static_cast<double>(j - j % 2) / static_cast<double>(d_model);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
      pe[pos * d_model + j] = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return ag::Tensor::from({length, d_model}, std::move(pe));
}

TransformerParams TransformerParams::create(ParamStore& store, const TransformerConfig& c, Rng& rng) {
  c.validate();
  TransformerParams p;
  p.embedding = store.uniform("embedding", {c.vocab_size, c.d_model}, rng);
  for (std::size_t l = 0; l < c.layers; ++l) {
    const std::string pre = "encoder.layer" + std::to_string(l);
    EncoderLayerParams layer;
    layer.self_attention = MultiHeadParams::create(store, pre + ".self_attention", c.d_model, c.heads, rng);
    layer.norm1 = make_norm(store, pre + ".norm1", c.d_model);
    layer.ffn = make_ffn(store, pre + ".ffn", c, rng);
    layer.norm2 = make_norm(store, pre + ".norm2", c.d_model);
    p.encoder.push_back(std::move(layer));
  }
  for (std::size_t l = 0; l < c.layers; ++l) {
    const std::string pre = "decoder.layer" + std::to_string(l);
    DecoderLayerParams layer;
    layer.self_attention = MultiHeadParams::create(store, pre + ".self_attention", c.d_model, c.heads, rng);
    layer.norm1 = make_norm(store, pre + ".norm1", c.d_model);
    layer.cross_attention = MultiHeadParams::create(store, pre + ".cross_attention", c.d_model, c.heads, rng);
    layer.norm2 = make_norm(store, pre + ".norm2", c.d_model);
    layer.ffn = make_ffn(store, pre + ".ffn", c, rng);
    layer.norm3 = make_norm(store, pre + ".norm3", c.d_model);
    p.decoder.push_back(std::move(layer));
  }
  p.out_weight = store.uniform("output.weight", {c.d_model, c.vocab_size}, rng);
  p.out_bias = store.constant("output.bias", {c.vocab_size});
  return p;
}

ag::Tensor encoder_forward(std::span<const int> ids, const TransformerConfig& config, const TransformerParams& params) {
  if (ids.empty()) throw std::invalid_argument("encoder_forward on an empty sequence");
  ag::Tensor x = embed_with_positions(ids, config, params);
  for (const EncoderLayerParams& layer : params.encoder) {
    x = add_norm(x, multi_head(x, x, x, layer.self_attention), layer.norm1, config.norm_eps);
    x = add_norm(x, feed_forward(x, layer.ffn), layer.norm2, config.norm_eps);
  }
  return x;
}

ag::Tensor decoder_forward(std::span<const int> target_ids, const ag::Tensor& memory, const TransformerConfig& config,
                           const TransformerParams& params) {
  if (target_ids.empty()) throw std::invalid_argument("decoder_forward on an empty target");
  const AttentionMask causal = AttentionMask::causal(target_ids.size());
  ag::Tensor y = embed_with_positions(target_ids, config, params);
  for (const DecoderLayerParams& layer : params.decoder) {
    y = add_norm(y, multi_head(y, y, y, layer.self_attention, &causal), layer.norm1, config.norm_eps);
    y = add_norm(y, multi_head(y, memory, memory, layer.cross_attention), layer.norm2, config.norm_eps);
    y = add_norm(y, feed_forward(y, layer.ffn), layer.norm3, config.norm_eps);
  }
  return ag::add(ag::matmul(y, params.out_weight), params.out_bias);
}

}  // namespace summ::model
