#include <algorithm>
#include <cmath>

#include "summ/gradcheck.hpp"

namespace summ::ag {
namespace {

GradCheckResult compare(const std::function<double()>& eval, std::vector<Tensor>& leaves, double step) {
  GradCheckResult result;
  for (Tensor& leaf : leaves) {
    std::vector<double> analytic(leaf.grad().begin(), leaf.grad().end());
    auto values = leaf.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + step;
      const double up = eval();
      values[i] = original - step;
      const double down = eval();
      values[i] = original;
      const double numeric = (up - down) / (2.0 * step);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
      result.max_rel_error = std::max(result.max_rel_error, std::abs(analytic[i] - numeric) / denom);
      ++result.coordinates;
    }
  }
  return result;
}

}  // namespace

GradCheckResult grad_check(const ScalarFn& f, const std::vector<Tensor>& point, double step) {
  std::vector<Tensor> leaves;
  leaves.reserve(point.size());
  for (const Tensor& p : point) {
    leaves.push_back(Tensor::from(p.shape(), std::vector<double>(p.data().begin(), p.data().end()), true));
  }
  Tensor loss = f(leaves);
  if (loss.size() != 1) throw ShapeError("grad_check needs a scalar-valued function");
  loss.backward();
  return compare(
      [&]() {
        NoGradGuard guard;
        return f(leaves).item();
      },
      leaves, step);
}

GradCheckResult grad_check_leaves(const std::function<Tensor()>& loss_fn, std::vector<Tensor> leaves, double step) {
  for (Tensor& leaf : leaves) {
    if (!leaf.is_leaf() || !leaf.requires_grad()) throw std::invalid_argument("grad_check_leaves needs trainable leaves");
    leaf.zero_grad();
  }
  Tensor loss = loss_fn();
  if (loss.size() != 1) throw ShapeError("grad_check needs a scalar-valued function");
  loss.backward();
  GradCheckResult r = compare(
      [&]() {
        NoGradGuard guard;
        return loss_fn().item();
      },
      leaves, step);
  for (Tensor& leaf : leaves) leaf.zero_grad();
  return r;
}

}  // namespace summ::ag
