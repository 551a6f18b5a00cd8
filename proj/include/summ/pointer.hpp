#pragma once

// Pointer-generator mixture and coverage mechanism.

#include <span>
#include <vector>

#include "summ/autograd.hpp"

namespace summ::model {

struct PointerHead {
  ag::Tensor w_context;  // (2h)
  ag::Tensor w_state;    // (h)
  ag::Tensor w_input;    // (E)
  ag::Tensor bias;       // rank 0
};

/// p_gen = sigmoid(w_context . h*_t + w_state . s_t + w_input . x_t + bias), rank 0.
ag::Tensor generation_probability(const ag::Tensor& context, const ag::Tensor& dec_state,
                                  const ag::Tensor& dec_input, const PointerHead& head);

/// P(w) = p_gen P_vocab(w) + (1 - p_gen) * sum of a_t over source positions
/// holding w, over |vocab| + n_oov extended ids. Repeated source words
/// accumulate; OOV slots get only the copy term.
ag::Tensor final_distribution(const ag::Tensor& p_gen, const ag::Tensor& p_vocab, const ag::Tensor& weights,
                              std::span<const int> article_ext_ids, std::size_t n_oov);

/// Running sum of past attention distributions.
struct CoverageState {
  ag::Tensor c;
  std::size_t t = 0;

  static CoverageState initial(std::size_t source_length);
};

CoverageState coverage_update(const CoverageState& state, const ag::Tensor& weights);

/// sum_i min(a_t[i], c_t[i])
ag::Tensor coverage_loss(const ag::Tensor& weights, const ag::Tensor& coverage);

/// (1/T) sum_t (nll_t + covloss_t)
ag::Tensor total_loss(const std::vector<ag::Tensor>& step_nll, const std::vector<ag::Tensor>& step_covloss);

}  // namespace summ::model
