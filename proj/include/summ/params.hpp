#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "summ/autograd.hpp"

namespace summ::model {

struct NamedParam {
  std::string name;
  ag::Tensor tensor;
};

/// Ordered collection of named trainable leaves. Order is creation order and
/// is what optimizers, clipping and checkpoints iterate over.
class ParamStore {
 public:
  ag::Tensor uniform(std::string name, ag::Shape shape, Rng& rng, double range = 0.1);
  ag::Tensor constant(std::string name, ag::Shape shape, double value = 0.0);

  const ag::Tensor& at(std::string_view name) const;
  bool contains(std::string_view name) const;
  const std::vector<NamedParam>& entries() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept;

  void zero_grad();
  double grad_norm() const;
  void scale_grads(double factor);

  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& values);

 private:
  ag::Tensor add(std::string name, ag::Tensor t);
  std::vector<NamedParam> params_;
};

}  // namespace summ::model
