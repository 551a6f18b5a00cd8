#include <algorithm>
#include <cmath>

#include "summ/params.hpp"

namespace summ::model {

ag::Tensor ParamStore::add(std::string name, ag::Tensor t) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name " + name);
  params_.push_back({std::move(name), t});
  return t;
}

ag::Tensor ParamStore::uniform(std::string name, ag::Shape shape, Rng& rng, double range) {
  std::vector<double> v(ag::shape_size(shape));
  for (double& x : v) x = rng.uniform(-range, range);
  return add(std::move(name), ag::Tensor::from(std::move(shape), std::move(v), true));
}

ag::Tensor ParamStore::constant(std::string name, ag::Shape shape, double value) {
  return add(std::move(name), ag::Tensor::full(std::move(shape), value, true));
}

const ag::Tensor& ParamStore::at(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return p.tensor;
  throw std::out_of_range("no parameter named " + std::string(name));
}

bool ParamStore::contains(std::string_view name) const {
  return std::any_of(params_.begin(), params_.end(), [&](const NamedParam& p) { return p.name == name; });
}

std::size_t ParamStore::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

double ParamStore::grad_norm() const {
  double s = 0.0;
  for (const auto& p : params_)
    for (double g : p.tensor.grad()) s += g * g;
  return std::sqrt(s);
}

void ParamStore::scale_grads(double factor) {
  for (auto& p : params_)
    for (double& g : p.tensor.mutable_grad()) g *= factor;
}

std::vector<std::vector<double>> ParamStore::snapshot() const {
  std::vector<std::vector<double>> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

void ParamStore::restore(const std::vector<std::vector<double>>& values) {
  if (values.size() != params_.size()) throw ShapeError("snapshot does not match parameter count");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto dst = params_[i].tensor.mutable_data();
    if (values[i].size() != dst.size()) throw ShapeError("snapshot size mismatch for " + params_[i].name);
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

}  // namespace summ::model
