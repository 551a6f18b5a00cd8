#include "summ/pointer.hpp"

namespace summ::model {

ag::Tensor generation_probability(const ag::Tensor& context, const ag::Tensor& dec_state,
                                  const ag::Tensor& dec_input, const PointerHead& head) {
  if (context.size() != head.w_context.size() || dec_state.size() != head.w_state.size() ||
      dec_input.size() != head.w_input.size()) {
    throw ShapeError("generation_probability: input sizes do not match the pointer head");
  }
  const ag::Tensor logit = ag::add(ag::add(ag::sum(ag::mul(head.w_context, context)),
                                           ag::sum(ag::mul(head.w_state, dec_state))),
                                   ag::add(ag::sum(ag::mul(head.w_input, dec_input)), head.bias));
  return ag::sigmoid(logit);
}

ag::Tensor final_distribution(const ag::Tensor& p_gen, const ag::Tensor& p_vocab, const ag::Tensor& weights,
                              std::span<const int> article_ext_ids, std::size_t n_oov) {
  if (weights.size() != article_ext_ids.size()) {
    throw ShapeError("final_distribution: " + std::to_string(weights.size()) + " attention weights for " +
                     std::to_string(article_ext_ids.size()) + " source ids");
  }
  const std::size_t total = p_vocab.size() + n_oov;
  for (int id : article_ext_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= total) {
      throw std::out_of_range("extended id " + std::to_string(id) + " outside extended vocabulary of " +
                              std::to_string(total));
    }
  }
  ag::Tensor generate = p_vocab;
  if (n_oov > 0) generate = ag::concat({p_vocab, ag::Tensor::zeros({n_oov})}, 0);
  const ag::Tensor copy = ag::scatter_add(weights, article_ext_ids, total);
  const ag::Tensor p_copy = ag::add_scalar(ag::neg(p_gen), 1.0);
  return ag::add(ag::mul(generate, p_gen), ag::mul(copy, p_copy));
}

CoverageState CoverageState::initial(std::size_t source_length) {
  return {ag::Tensor::zeros({source_length}), 0};
}

CoverageState coverage_update(const CoverageState& state, const ag::Tensor& weights) {
  if (weights.shape() != state.c.shape()) {
    throw ShapeError("coverage_update: attention " + ag::shape_str(weights.shape()) + " vs coverage " +
                     ag::shape_str(state.c.shape()));
  }
  return {ag::add(state.c, weights), state.t + 1};
}

ag::Tensor coverage_loss(const ag::Tensor& weights, const ag::Tensor& coverage) {
  if (weights.shape() != coverage.shape()) {
    throw ShapeError("coverage_loss: attention " + ag::shape_str(weights.shape()) + " vs coverage " +
                     ag::shape_str(coverage.shape()));
  }
  return ag::sum(ag::minimum(weights, coverage));
}

ag::Tensor total_loss(const std::vector<ag::Tensor>& step_nll, const std::vector<ag::Tensor>& step_covloss) {
  if (step_nll.size() != step_covloss.size()) {
    throw ShapeError("total_loss: " + std::to_string(step_nll.size()) + " NLL terms vs " +
                     std::to_string(step_covloss.size()) + " coverage terms");
  }
  if (step_nll.empty()) throw std::invalid_argument("total_loss of zero steps");
  return ag::mean(ag::add(ag::stack(step_nll), ag::stack(step_covloss)));
}

}  // namespace summ::model
