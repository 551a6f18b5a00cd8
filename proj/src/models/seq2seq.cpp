#include "summ/seq2seq.hpp"

namespace summ::model {

LstmCell LstmCell::create(ParamStore& store, const std::string& prefix, std::size_t input_size,
                          std::size_t hidden_size, Rng& rng) {
  LstmCell cell;
  cell.input_size = input_size;
  cell.hidden_size = hidden_size;
  cell.weight = store.uniform(prefix + ".weight", {4 * hidden_size, input_size + hidden_size}, rng);
  cell.bias = store.constant(prefix + ".bias", {4 * hidden_size}, 0.0);
  auto b = cell.bias.mutable_data();
  for (std::size_t i = hidden_size; i < 2 * hidden_size; ++i) b[i] = 1.0;
  return cell;
}

LstmState LstmState::zeros(std::size_t hidden_size) {
  return {ag::Tensor::zeros({hidden_size}), ag::Tensor::zeros({hidden_size})};
}

LstmState lstm_step(const LstmCell& cell, const ag::Tensor& x, const LstmState& prev) {
  const std::size_t h = cell.hidden_size;
  if (x.rank() != 1 || x.size() != cell.input_size) {
    throw ShapeError("lstm_step input has shape " + ag::shape_str(x.shape()) + ", expected (" +
                     std::to_string(cell.input_size) + ")");
  }
  if (prev.h.size() != h || prev.c.size() != h) throw ShapeError("lstm_step state size mismatch");
  const ag::Tensor z = ag::add(ag::matmul(cell.weight, ag::concat({x, prev.h}, 0)), cell.bias);
  const ag::Tensor i = ag::sigmoid(ag::slice(z, 0, 0, h));
  const ag::Tensor f = ag::sigmoid(ag::slice(z, 0, h, 2 * h));
  const ag::Tensor o = ag::sigmoid(ag::slice(z, 0, 2 * h, 3 * h));
  const ag::Tensor g = ag::tanh(ag::slice(z, 0, 3 * h, 4 * h));
  const ag::Tensor c = ag::add(ag::mul(f, prev.c), ag::mul(i, g));
  return {ag::mul(o, ag::tanh(c)), c};
}

EncoderStates encode(std::span<const int> article_ids, const EncoderParams& params) {
  if (article_ids.empty()) throw std::invalid_argument("cannot encode an empty article");
  const std::size_t n = article_ids.size();
  const std::size_t h = params.forward.hidden_size;
  std::vector<ag::Tensor> inputs;
  inputs.reserve(n);
  for (int id : article_ids) inputs.push_back(ag::embedding_row(params.embedding, id));

  EncoderStates out;
  out.forward_h.resize(n);
  out.backward_h.resize(n);
  LstmState fw = LstmState::zeros(h);
  for (std::size_t i = 0; i < n; ++i) {
    fw = lstm_step(params.forward, inputs[i], fw);
    out.forward_h[i] = fw.h;
  }
  LstmState bw = LstmState::zeros(h);
  for (std::size_t i = n; i-- > 0;) {
    bw = lstm_step(params.backward, inputs[i], bw);
    out.backward_h[i] = bw.h;
  }
  std::vector<ag::Tensor> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) rows.push_back(ag::concat({out.forward_h[i], out.backward_h[i]}, 0));
  out.states = ag::stack(rows);

  const ag::Tensor final_h = ag::concat({fw.h, bw.h}, 0);
  const ag::Tensor final_c = ag::concat({fw.c, bw.c}, 0);
  out.decoder_init.h = ag::add(ag::matmul(params.init_h_weight, final_h), params.init_h_bias);
  out.decoder_init.c = ag::add(ag::matmul(params.init_c_weight, final_c), params.init_c_bias);
  return out;
}

ag::Tensor attention_features(const ag::Tensor& enc_states, const AttentionParams& params) {
  return ag::matmul(enc_states, ag::transpose(params.enc_weight));
}

Attention attention_scores(const ag::Tensor& enc_features, const ag::Tensor& dec_state,
                           const AttentionParams& params, const ag::Tensor* coverage) {
  const std::size_t n = enc_features.dim(0);
  ag::Tensor pre = ag::add(enc_features, ag::add(ag::matmul(params.dec_weight, dec_state), params.bias));
  if (coverage) {
    if (coverage->rank() != 1 || coverage->size() != n) {
      throw ShapeError("coverage has " + std::to_string(coverage->size()) + " entries for " + std::to_string(n) +
                       " source positions");
    }
    if (!params.coverage_weight.defined()) throw std::logic_error("model has no coverage weight");
    pre = ag::add(pre, ag::outer(*coverage, params.coverage_weight));
  }
  Attention att;
  att.scores = ag::matmul(ag::tanh(pre), params.v);
  att.weights = ag::softmax(att.scores);
  return att;
}

ag::Tensor context_vector(const ag::Tensor& weights, const ag::Tensor& enc_states) {
  if (weights.rank() != 1 || enc_states.rank() != 2 || weights.size() != enc_states.dim(0)) {
    throw ShapeError("context_vector: " + std::to_string(weights.size()) + " weights for " +
                     ag::shape_str(enc_states.shape()) + " states");
  }
  return ag::matmul(weights, enc_states);
}

ag::Tensor vocab_distribution(const ag::Tensor& dec_state, const ag::Tensor& context, const OutputProjection& proj) {
  const ag::Tensor hidden =
      ag::add(ag::matmul(proj.hidden_weight, ag::concat({dec_state, context}, 0)), proj.hidden_bias);
  return ag::softmax(ag::add(ag::matmul(proj.vocab_weight, hidden), proj.vocab_bias));
}

ag::Tensor step_loss(const ag::Tensor& probs, int target) {
  if (target < 0 || static_cast<std::size_t>(target) >= probs.size()) {
    throw std::out_of_range("target id " + std::to_string(target) + " outside distribution of " +
                            std::to_string(probs.size()));
  }
  return ag::neg(ag::log(ag::clamp_min(ag::pick(probs, static_cast<std::size_t>(target)), kProbFloor)));
}

ag::Tensor sequence_loss(const std::vector<ag::Tensor>& step_losses) {
  if (step_losses.empty()) throw std::invalid_argument("sequence_loss of zero steps");
  return ag::mean(ag::stack(step_losses));
}

}  // namespace summ::model
