#include <cmath>
#include <sstream>
#include <unordered_set>

#include "summ/autograd.hpp"

namespace summ::ag {
namespace {

thread_local bool t_grad_enabled = true;
bool g_debug_checks = false;

Tensor make_leaf(Shape shape, std::vector<double> values, bool requires_grad) {
  if (values.size() != shape_size(shape)) {
    throw ShapeError("tensor of shape " + shape_str(shape) + " given " +
                     std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(node->value.size(), 0.0);
  return Tensor(std::move(node));
}

template <typename Parents>
Tensor make_result_impl(const char* op, Shape shape, std::vector<double> value,
                        const Parents& parents, BackwardFn backward) {
  if (g_debug_checks) {
    for (double v : value) {
      if (!std::isfinite(v)) throw NumericError(std::string("non-finite value produced by ") + op);
    }
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  node->is_leaf = false;
  bool needs = false;
  if (t_grad_enabled) {
    for (const Tensor& p : parents) {
      if (p.requires_grad()) {
        if (p.node()->released) {
          throw std::logic_error(std::string("op ") + op +
                                 " consumes a tensor whose graph was already released by backward()");
        }
        needs = true;
      }
    }
  }
  if (needs) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (const Tensor& p : parents) node->parents.push_back(p.node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

}  // namespace

std::size_t shape_size(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return make_leaf(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return make_leaf(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  return make_leaf(std::move(shape), std::move(values), requires_grad);
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  const std::size_t n = values.size();
  return make_leaf(Shape{n}, std::move(values), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return make_leaf(Shape{}, std::vector<double>{value}, requires_grad);
}

std::span<double> Tensor::mutable_data() {
  if (!node_->is_leaf) throw std::logic_error("only leaf tensors may be edited in place");
  return node_->value;
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

void Tensor::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::backward(bool retain_graph) const {
  if (size() != 1) {
    throw ShapeError("backward() needs a single-element loss, got shape " + shape_str(shape()));
  }
  if (!node_->requires_grad) return;
  if (node_->released) {
    throw std::logic_error("backward() called twice on a graph that was not retained");
  }

  // Iterative post-order DFS gives a topological order (parents before children).
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && !seen.count(parent)) {
        if (parent->released) {
          throw std::logic_error("backward() reached a node released by an earlier backward()");
        }
        seen.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    if (!n->is_leaf) n->grad.assign(n->value.size(), 0.0);
  }
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->is_leaf && n->backward) n->backward(*n);
  }
  if (!retain_graph) {
    for (Node* n : order) {
      if (n->is_leaf) continue;
      n->backward = nullptr;
      n->parents.clear();
      n->grad.clear();
      n->grad.shrink_to_fit();
      n->released = true;
    }
  }
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

bool grad_enabled() noexcept { return t_grad_enabled; }

void set_debug_checks(bool on) noexcept { g_debug_checks = on; }
bool debug_checks() noexcept { return g_debug_checks; }

Tensor make_result(const char* op, Shape shape, std::vector<double> value,
                   std::initializer_list<Tensor> parents, BackwardFn backward) {
  return make_result_impl(op, std::move(shape), std::move(value), parents, std::move(backward));
}

Tensor make_result(const char* op, Shape shape, std::vector<double> value,
                   const std::vector<Tensor>& parents, BackwardFn backward) {
  return make_result_impl(op, std::move(shape), std::move(value), parents, std::move(backward));
}

}  // namespace summ::ag
