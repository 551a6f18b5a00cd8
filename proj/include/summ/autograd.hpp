#pragma once

// Reverse-mode automatic differentiation over dense row-major double tensors.
//
// A Tensor is a cheap handle onto a graph node. Ops record their parents and a
// backward closure when gradient recording is enabled and any input requires
// a gradient. backward() walks the recorded graph once in reverse topological
// order and then frees it unless asked to retain it.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "summ/common.hpp"

namespace summ::ag {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape) noexcept;
std::string shape_str(const Shape& shape);

struct Node;
using BackwardFn = std::function<void(Node&)>;

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  bool is_leaf = true;
  bool released = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->value.size(); }

  std::span<const double> data() const { return node_->value; }
  // Leaf values may be edited in place (parameter updates, finite differences).
  std::span<double> mutable_data();
  double operator[](std::size_t i) const { return node_->value[i]; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->is_leaf; }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad; }
  void zero_grad();

  /// Fills gradients of every reachable leaf that requires one. The loss must
  /// hold exactly one element. Leaf gradients accumulate across calls.
  void backward(bool retain_graph = false) const;

  const char* op_name() const { return node_->op; }
  const std::shared_ptr<Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<Node> node_;
};

/// Disables graph recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled() noexcept;

/// When on, every op checks its output for NaN/Inf and throws NumericError.
void set_debug_checks(bool on) noexcept;
bool debug_checks() noexcept;

// Internal helper used by op implementations.
Tensor make_result(const char* op, Shape shape, std::vector<double> value,
                   std::initializer_list<Tensor> parents, BackwardFn backward);
Tensor make_result(const char* op, Shape shape, std::vector<double> value,
                   const std::vector<Tensor>& parents, BackwardFn backward);

// ---- forward ops ----------------------------------------------------------------
//
// Broadcasting is limited to what the models need: identical shapes, either
// operand holding a single element, or a rank-2 lhs with a rank-1 rhs whose
// length equals the lhs column count (row broadcast).

// (m,k)x(k,n) -> (m,n); (m,k)x(k) -> (m); (k)x(k,n) -> (n)
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor exp(const Tensor& x);
// Throws NumericError on any non-positive entry.
Tensor log(const Tensor& x);
Tensor neg(const Tensor& x);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);
Tensor clamp_min(const Tensor& x, double floor);
Tensor minimum(const Tensor& a, const Tensor& b);
// Softmax over the last axis with max subtraction. `mask`, when given, has one
// entry per element; false entries get weight exactly 0. A row with no allowed
// entry, or an empty last axis, throws.
Tensor softmax(const Tensor& x, const std::vector<bool>* mask = nullptr);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
// Rank-0 parts stack to (n); rank-1 parts of equal length stack to (n, d).
Tensor stack(const std::vector<Tensor>& parts);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);
Tensor reshape(const Tensor& x, Shape shape);
// table (V, E), ids -> (n, E)
Tensor embedding(const Tensor& table, std::span<const int> ids);
// table (V, E), id -> (E)
Tensor embedding_row(const Tensor& table, int id);
Tensor sum(const Tensor& x);
Tensor sum(const Tensor& x, std::size_t axis);
Tensor mean(const Tensor& x);
Tensor mean(const Tensor& x, std::size_t axis);
// Flattened element i as a rank-0 tensor.
Tensor pick(const Tensor& x, std::size_t index);
// out[indices[i]] += values[i]; values rank 1.
Tensor scatter_add(const Tensor& values, std::span<const int> indices, std::size_t out_size);
Tensor outer(const Tensor& u, const Tensor& v);
// Normalizes each row (last axis) to zero mean, unit variance, then gamma*x+beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);

}  // namespace summ::ag
