#pragma once

#include <functional>
#include <string>
#include <vector>

#include "summ/autograd.hpp"

namespace summ::ag {

using ScalarFn = std::function<Tensor(const std::vector<Tensor>& inputs)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
};

/// Compares reverse-mode gradients of `f` at `point` with central differences.
/// Per coordinate the error is |analytic - numeric| / max(|analytic|, |numeric|, 1e-6);
/// the maximum over all coordinates of all inputs is returned. Inputs are
/// copied into fresh leaves, so `point` is left untouched.
GradCheckResult grad_check(const ScalarFn& f, const std::vector<Tensor>& point, double step = 1e-4);

/// Same comparison over existing trainable leaves that `loss` closes over,
/// e.g. model parameters. Their gradients are zeroed before and after.
GradCheckResult grad_check_leaves(const std::function<Tensor()>& loss, std::vector<Tensor> leaves,
                                  double step = 1e-4);

/// One named differentiable case run by the `gradcheck` command.
struct GradCase {
  std::string name;
  std::function<GradCheckResult()> run;
};

/// One case per registered autograd op.
std::vector<GradCase> op_grad_cases(std::uint64_t seed = 1234);

}  // namespace summ::ag
