#include <algorithm>
#include <cmath>
#include <limits>

#include "summ/autograd.hpp"
#include "summ/kernels.hpp"

namespace summ::ag {
namespace {

namespace k = summ::kernels;

double* grad_of(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  return p.requires_grad ? p.grad.data() : nullptr;
}

const std::vector<double>& value_of(Node& self, std::size_t i) { return self.parents[i]->value; }

[[noreturn]] void shape_mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " and " +
                   shape_str(b.shape()));
}

enum class Broadcast { Same, ScalarRhs, ScalarLhs, Row };

Broadcast broadcast_kind(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return Broadcast::Same;
  if (b.size() == 1) return Broadcast::ScalarRhs;
  if (a.size() == 1) return Broadcast::ScalarLhs;
  if (a.rank() == 2 && b.rank() == 1 && a.dim(1) == b.dim(0)) return Broadcast::Row;
  shape_mismatch(op, a, b);
}

template <typename F>
Tensor unary(const char* op, const Tensor& x, F f, std::function<double(double x, double y)> dfdx) {
  std::vector<double> out(x.size());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_result(op, x.shape(), std::move(out), {x}, [dfdx](Node& self) {
    double* gx = grad_of(self, 0);
    if (!gx) return;
    const auto& xv = value_of(self, 0);
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += self.grad[i] * dfdx(xv[i], self.value[i]);
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() == 2 && b.rank() == 2) {
    const std::size_t m = a.dim(0), kk = a.dim(1), n = b.dim(1);
    if (b.dim(0) != kk) shape_mismatch("matmul", a, b);
    std::vector<double> out(m * n);
    k::gemm(a.data().data(), b.data().data(), out.data(), m, kk, n);
    return make_result("matmul", Shape{m, n}, std::move(out), {a, b}, [m, kk, n](Node& self) {
      const double* g = self.grad.data();
      if (double* ga = grad_of(self, 0)) k::gemm_nt_acc(g, value_of(self, 1).data(), ga, m, n, kk);
      if (double* gb = grad_of(self, 1)) k::gemm_tn_acc(value_of(self, 0).data(), g, gb, m, kk, n);
    });
  }
  if (a.rank() == 2 && b.rank() == 1) {
    const std::size_t m = a.dim(0), kk = a.dim(1);
    if (b.dim(0) != kk) shape_mismatch("matmul", a, b);
    std::vector<double> out(m);
    k::active().gemv(a.data().data(), m, kk, b.data().data(), out.data());
    return make_result("matmul", Shape{m}, std::move(out), {a, b}, [m, kk](Node& self) {
      const double* g = self.grad.data();
      if (double* ga = grad_of(self, 0)) k::active().ger_acc(ga, m, kk, g, value_of(self, 1).data());
      if (double* gb = grad_of(self, 1)) k::active().gemv_t_acc(value_of(self, 0).data(), m, kk, g, gb);
    });
  }
  if (a.rank() == 1 && b.rank() == 2) {
    const std::size_t kk = a.dim(0), n = b.dim(1);
    if (b.dim(0) != kk) shape_mismatch("matmul", a, b);
    std::vector<double> out(n, 0.0);
    k::active().gemv_t_acc(b.data().data(), kk, n, a.data().data(), out.data());
    return make_result("matmul", Shape{n}, std::move(out), {a, b}, [kk, n](Node& self) {
      const double* g = self.grad.data();
      if (double* ga = grad_of(self, 0)) {
        const double* bv = value_of(self, 1).data();
        for (std::size_t p = 0; p < kk; ++p) ga[p] += k::active().dot(bv + p * n, g, n);
      }
      if (double* gb = grad_of(self, 1)) k::active().ger_acc(gb, kk, n, value_of(self, 0).data(), g);
    });
  }
  shape_mismatch("matmul", a, b);
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("transpose needs a rank-2 tensor, got " + shape_str(a.shape()));
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  auto in = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = in[i * n + j];
  return make_result("transpose", Shape{n, m}, std::move(out), {a}, [m, n](Node& self) {
    double* ga = grad_of(self, 0);
    if (!ga) return;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self.grad[j * m + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  const Broadcast kind = broadcast_kind("add", a, b);
  if (kind == Broadcast::ScalarLhs) return add(b, a);
  const Tensor& big = a;
  std::vector<double> out(big.size());
  auto av = a.data();
  auto bv = b.data();
  if (kind == Broadcast::Same) {
    k::active().add(av.data(), bv.data(), out.data(), out.size());
  } else if (kind == Broadcast::ScalarRhs) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[0];
  } else {
    const std::size_t cols = b.size();
    for (std::size_t r = 0; r < a.dim(0); ++r)
      k::active().add(av.data() + r * cols, bv.data(), out.data() + r * cols, cols);
  }
  const std::size_t bn = b.size();
  return make_result("add", big.shape(), std::move(out), {a, b}, [kind, bn](Node& self) {
    const std::size_t n = self.grad.size();
    if (double* ga = grad_of(self, 0)) k::active().axpy(1.0, self.grad.data(), ga, n);
    if (double* gb = grad_of(self, 1)) {
      if (kind == Broadcast::Same) {
        k::active().axpy(1.0, self.grad.data(), gb, n);
      } else if (kind == Broadcast::ScalarRhs) {
        double s = 0.0;
        for (double g : self.grad) s += g;
        gb[0] += s;
      } else {
        for (std::size_t r = 0; r < n / bn; ++r) k::active().axpy(1.0, self.grad.data() + r * bn, gb, bn);
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const Broadcast kind = broadcast_kind("sub", a, b);
  if (kind == Broadcast::ScalarLhs) return add(neg(b), a);
  return add(a, neg(b));
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const Broadcast kind = broadcast_kind("mul", a, b);
  if (kind == Broadcast::ScalarLhs) return mul(b, a);
  std::vector<double> out(a.size());
  auto av = a.data();
  auto bv = b.data();
  const std::size_t bn = b.size();
  if (kind == Broadcast::Same) {
    k::active().mul(av.data(), bv.data(), out.data(), out.size());
  } else if (kind == Broadcast::ScalarRhs) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[0];
  } else {
    for (std::size_t r = 0; r < a.dim(0); ++r)
      k::active().mul(av.data() + r * bn, bv.data(), out.data() + r * bn, bn);
  }
  return make_result("mul", a.shape(), std::move(out), {a, b}, [kind, bn](Node& self) {
    const std::size_t n = self.grad.size();
    const auto& av = value_of(self, 0);
    const auto& bv = value_of(self, 1);
    const double* g = self.grad.data();
    if (double* ga = grad_of(self, 0)) {
      if (kind == Broadcast::Same) {
        k::active().mul_acc(g, bv.data(), ga, n);
      } else if (kind == Broadcast::ScalarRhs) {
        k::active().axpy(bv[0], g, ga, n);
      } else {
        for (std::size_t r = 0; r < n / bn; ++r) k::active().mul_acc(g + r * bn, bv.data(), ga + r * bn, bn);
      }
    }
    if (double* gb = grad_of(self, 1)) {
      if (kind == Broadcast::Same) {
        k::active().mul_acc(g, av.data(), gb, n);
      } else if (kind == Broadcast::ScalarRhs) {
        gb[0] += k::active().dot(g, av.data(), n);
      } else {
        for (std::size_t r = 0; r < n / bn; ++r) k::active().mul_acc(g + r * bn, av.data() + r * bn, gb, bn);
      }
    }
  });
}

Tensor tanh(const Tensor& x) {
  return unary("tanh", x, [](double v) { return std::tanh(v); },
               [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x,
      [](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& x) {
  return unary("relu", x, [](double v) { return v > 0 ? v : 0.0; },
               [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& x) {
  return unary("exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  for (double v : x.data()) {
    if (!(v > 0.0)) throw NumericError("log of non-positive value " + std::to_string(v));
  }
  return unary("log", x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor neg(const Tensor& x) { return scale(x, -1.0); }

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.size());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * in[i];
  return make_result("scale", x.shape(), std::move(out), {x}, [factor](Node& self) {
    if (double* gx = grad_of(self, 0)) k::active().axpy(factor, self.grad.data(), gx, self.grad.size());
  });
}

Tensor add_scalar(const Tensor& x, double value) {
  std::vector<double> out(x.size());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] + value;
  return make_result("add_scalar", x.shape(), std::move(out), {x}, [](Node& self) {
    if (double* gx = grad_of(self, 0)) k::active().axpy(1.0, self.grad.data(), gx, self.grad.size());
  });
}

Tensor clamp_min(const Tensor& x, double floor) {
  return unary("clamp_min", x, [floor](double v) { return v < floor ? floor : v; },
               [floor](double v, double) { return v < floor ? 0.0 : 1.0; });
}

Tensor minimum(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_mismatch("minimum", a, b);
  std::vector<double> out(a.size());
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(av[i], bv[i]);
  // Ties send the gradient to the first operand.
  return make_result("minimum", a.shape(), std::move(out), {a, b}, [](Node& self) {
    const auto& av = value_of(self, 0);
    const auto& bv = value_of(self, 1);
    double* ga = grad_of(self, 0);
    double* gb = grad_of(self, 1);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (av[i] <= bv[i]) {
        if (ga) ga[i] += self.grad[i];
      } else if (gb) {
        gb[i] += self.grad[i];
      }
    }
  });
}

Tensor softmax(const Tensor& x, const std::vector<bool>* mask) {
  if (x.rank() == 0) throw ShapeError("softmax needs at least one axis");
  const std::size_t cols = x.shape().back();
  if (cols == 0) throw ShapeError("softmax over an empty axis");
  if (mask && mask->size() != x.size()) {
    throw ShapeError("softmax mask has " + std::to_string(mask->size()) + " entries for tensor " +
                     shape_str(x.shape()));
  }
  const std::size_t rows = x.size() / cols;
  std::vector<double> out(x.size(), 0.0);
  auto in = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = in.data() + r * cols;
    double* yr = out.data() + r * cols;
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t c = 0; c < cols; ++c) {
      if (mask && !(*mask)[r * cols + c]) continue;
      mx = std::max(mx, xr[c]);
      any = true;
    }
    if (!any) throw std::invalid_argument("softmax row " + std::to_string(r) + " has every entry masked");
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (mask && !(*mask)[r * cols + c]) continue;
      yr[c] = std::exp(xr[c] - mx);
      total += yr[c];
    }
    const double inv = 1.0 / total;
    for (std::size_t c = 0; c < cols; ++c) yr[c] *= inv;
  }
  return make_result("softmax", x.shape(), std::move(out), {x}, [cols](Node& self) {
    double* gx = grad_of(self, 0);
    if (!gx) return;
    const std::size_t rows = self.value.size() / cols;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.value.data() + r * cols;
      const double* g = self.grad.data() + r * cols;
      const double inner = k::active().dot(y, g, cols);
      for (std::size_t c = 0; c < cols; ++c) gx[r * cols + c] += y[c] * (g[c] - inner);
    }
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw ShapeError("concat axis out of range for " + shape_str(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != first.size()) shape_mismatch("concat", parts.front(), p);
    for (std::size_t d = 0; d < first.size(); ++d) {
      if (d != axis && p.dim(d) != first[d]) shape_mismatch("concat", parts.front(), p);
    }
    out_shape[axis] += p.dim(axis);
  }
  // View every tensor as (outer, axis_len * inner) blocks.
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];
  const std::size_t out_row = out_shape[axis] * inner;
  std::vector<double> out(shape_size(out_shape));
  std::vector<std::size_t> widths;
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    const std::size_t w = p.dim(axis) * inner;
    auto pv = p.data();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(pv.data() + o * w, w, out.data() + o * out_row + offset);
    widths.push_back(w);
    offset += w;
  }
  return make_result("concat", out_shape, std::move(out), parts, [outer, out_row, widths](Node& self) {
    std::size_t offset = 0;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      const std::size_t w = widths[i];
      if (double* gp = grad_of(self, i)) {
        for (std::size_t o = 0; o < outer; ++o)
          k::active().axpy(1.0, self.grad.data() + o * out_row + offset, gp + o * w, w);
      }
      offset += w;
    }
  });
}

Tensor stack(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("stack of zero tensors");
  const Shape& first = parts.front().shape();
  if (first.size() > 1) throw ShapeError("stack supports rank-0 and rank-1 parts");
  const std::size_t width = parts.front().size();
  std::vector<double> out;
  out.reserve(width * parts.size());
  for (const Tensor& p : parts) {
    if (p.shape() != first) shape_mismatch("stack", parts.front(), p);
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  Shape shape = first.empty() ? Shape{parts.size()} : Shape{parts.size(), width};
  return make_result("stack", shape, std::move(out), parts, [width](Node& self) {
    for (std::size_t i = 0; i < self.parents.size(); ++i) {
      if (double* gp = grad_of(self, i)) k::active().axpy(1.0, self.grad.data() + i * width, gp, width);
    }
  });
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
  if (axis >= x.rank()) throw ShapeError("slice axis out of range for " + shape_str(x.shape()));
  if (begin > end || end > x.dim(axis)) {
    throw ShapeError("slice [" + std::to_string(begin) + "," + std::to_string(end) + ") out of range for " +
                     shape_str(x.shape()));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= x.dim(d);
  for (std::size_t d = axis + 1; d < x.rank(); ++d) inner *= x.dim(d);
  const std::size_t in_row = x.dim(axis) * inner;
  const std::size_t w = (end - begin) * inner;
  const std::size_t off = begin * inner;
  Shape shape = x.shape();
  shape[axis] = end - begin;
  std::vector<double> out(outer * w);
  auto in = x.data();
  for (std::size_t o = 0; o < outer; ++o) std::copy_n(in.data() + o * in_row + off, w, out.data() + o * w);
  return make_result("slice", shape, std::move(out), {x}, [outer, in_row, w, off](Node& self) {
    double* gx = grad_of(self, 0);
    if (!gx) return;
    for (std::size_t o = 0; o < outer; ++o)
      k::active().axpy(1.0, self.grad.data() + o * w, gx + o * in_row + off, w);
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw ShapeError("cannot reshape " + shape_str(x.shape()) + " to " + shape_str(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return make_result("reshape", std::move(shape), std::move(out), {x}, [](Node& self) {
    if (double* gx = grad_of(self, 0)) k::active().axpy(1.0, self.grad.data(), gx, self.grad.size());
  });
}

Tensor embedding(const Tensor& table, std::span<const int> ids) {
  if (table.rank() != 2) throw ShapeError("embedding table must be rank 2");
  const std::size_t rows = table.dim(0), width = table.dim(1);
  std::vector<int> idx(ids.begin(), ids.end());
  std::vector<double> out(idx.size() * width);
  auto tv = table.data();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= rows) {
      throw std::out_of_range("embedding id " + std::to_string(idx[i]) + " outside table of " +
                              std::to_string(rows));
    }
    std::copy_n(tv.data() + idx[i] * width, width, out.data() + i * width);
  }
  return make_result("embedding", Shape{idx.size(), width}, std::move(out), {table},
                     [idx, width](Node& self) {
                       double* gt = grad_of(self, 0);
                       if (!gt) return;
                       for (std::size_t i = 0; i < idx.size(); ++i)
                         k::active().axpy(1.0, self.grad.data() + i * width, gt + idx[i] * width, width);
                     });
}

Tensor embedding_row(const Tensor& table, int id) {
  if (table.rank() != 2) throw ShapeError("embedding table must be rank 2");
  const std::size_t rows = table.dim(0), width = table.dim(1);
  if (id < 0 || static_cast<std::size_t>(id) >= rows) {
    throw std::out_of_range("embedding id " + std::to_string(id) + " outside table of " + std::to_string(rows));
  }
  auto tv = table.data();
  std::vector<double> out(tv.begin() + id * width, tv.begin() + (id + 1) * width);
  return make_result("embedding", Shape{width}, std::move(out), {table}, [id, width](Node& self) {
    if (double* gt = grad_of(self, 0)) k::active().axpy(1.0, self.grad.data(), gt + id * width, width);
  });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return make_result("sum", Shape{}, std::vector<double>{s}, {x}, [](Node& self) {
    double* gx = grad_of(self, 0);
    if (!gx) return;
    const double g = self.grad[0];
    const std::size_t n = self.parents[0]->value.size();
    for (std::size_t i = 0; i < n; ++i) gx[i] += g;
  });
}

Tensor sum(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) throw ShapeError("sum axis out of range for " + shape_str(x.shape()));
  std::size_t outer = 1, inner = 1;
  const std::size_t len = x.dim(axis);
  for (std::size_t d = 0; d < axis; ++d) outer *= x.dim(d);
  for (std::size_t d = axis + 1; d < x.rank(); ++d) inner *= x.dim(d);
  Shape shape;
  for (std::size_t d = 0; d < x.rank(); ++d)
    if (d != axis) shape.push_back(x.dim(d));
  std::vector<double> out(outer * inner, 0.0);
  auto in = x.data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t l = 0; l < len; ++l)
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += in[(o * len + l) * inner + i];
  return make_result("sum_axis", shape, std::move(out), {x}, [outer, len, inner](Node& self) {
    double* gx = grad_of(self, 0);
    if (!gx) return;
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t l = 0; l < len; ++l)
        for (std::size_t i = 0; i < inner; ++i) gx[(o * len + l) * inner + i] += self.grad[o * inner + i];
  });
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor mean(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank() || x.dim(axis) == 0) throw ShapeError("mean over an empty or missing axis");
  return scale(sum(x, axis), 1.0 / static_cast<double>(x.dim(axis)));
}

Tensor pick(const Tensor& x, std::size_t index) {
  if (index >= x.size()) {
    throw std::out_of_range("pick index " + std::to_string(index) + " outside tensor of " +
                            std::to_string(x.size()));
  }
  return make_result("pick", Shape{}, std::vector<double>{x[index]}, {x}, [index](Node& self) {
    if (double* gx = grad_of(self, 0)) gx[index] += self.grad[0];
  });
}

Tensor scatter_add(const Tensor& values, std::span<const int> indices, std::size_t out_size) {
  if (values.rank() != 1 || values.size() != indices.size()) {
    throw ShapeError("scatter_add needs one index per value, got " + std::to_string(indices.size()) +
                     " for " + shape_str(values.shape()));
  }
  std::vector<int> idx(indices.begin(), indices.end());
  std::vector<double> out(out_size, 0.0);
  auto vv = values.data();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= out_size) {
      throw std::out_of_range("scatter index " + std::to_string(idx[i]) + " outside size " +
                              std::to_string(out_size));
    }
    out[idx[i]] += vv[i];
  }
  return make_result("scatter_add", Shape{out_size}, std::move(out), {values}, [idx](Node& self) {
    double* gv = grad_of(self, 0);
    if (!gv) return;
    for (std::size_t i = 0; i < idx.size(); ++i) gv[i] += self.grad[idx[i]];
  });
}

Tensor outer(const Tensor& u, const Tensor& v) {
  if (u.rank() != 1 || v.rank() != 1) shape_mismatch("outer", u, v);
  const std::size_t m = u.size(), n = v.size();
  std::vector<double> out(m * n, 0.0);
  k::active().ger_acc(out.data(), m, n, u.data().data(), v.data().data());
  return make_result("outer", Shape{m, n}, std::move(out), {u, v}, [m, n](Node& self) {
    const double* g = self.grad.data();
    if (double* gu = grad_of(self, 0)) {
      const double* vv = value_of(self, 1).data();
      for (std::size_t i = 0; i < m; ++i) gu[i] += k::active().dot(g + i * n, vv, n);
    }
    if (double* gv = grad_of(self, 1)) k::active().gemv_t_acc(g, m, n, value_of(self, 0).data(), gv);
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  if (x.rank() == 0) throw ShapeError("layer_norm needs at least one axis");
  const std::size_t cols = x.shape().back();
  if (gamma.rank() != 1 || gamma.size() != cols || beta.shape() != gamma.shape()) {
    throw ShapeError("layer_norm parameters must have shape (" + std::to_string(cols) + ")");
  }
  const std::size_t rows = x.size() / cols;
  std::vector<double> normed(x.size());
  std::vector<double> inv_std(rows);
  std::vector<double> out(x.size());
  auto xv = x.data();
  auto gv = gamma.data();
  auto bv = beta.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xv.data() + r * cols;
    double mu = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mu += xr[c];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (xr[c] - mu) * (xr[c] - mu);
    var /= static_cast<double>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) {
      normed[r * cols + c] = (xr[c] - mu) * inv_std[r];
      out[r * cols + c] = gv[c] * normed[r * cols + c] + bv[c];
    }
  }
  return make_result("layer_norm", x.shape(), std::move(out), {x, gamma, beta},
                     [cols, rows, normed = std::move(normed), inv_std = std::move(inv_std)](Node& self) {
                       const auto& gv = value_of(self, 1);
                       double* gx = grad_of(self, 0);
                       double* gg = grad_of(self, 1);
                       double* gb = grad_of(self, 2);
                       const double n = static_cast<double>(cols);
                       std::vector<double> dn(cols);
                       for (std::size_t r = 0; r < rows; ++r) {
                         const double* g = self.grad.data() + r * cols;
                         const double* xh = normed.data() + r * cols;
                         if (gg) k::active().mul_acc(g, xh, gg, cols);
                         if (gb) k::active().axpy(1.0, g, gb, cols);
                         if (!gx) continue;
                         double mean_dn = 0.0, mean_dn_xh = 0.0;
                         for (std::size_t c = 0; c < cols; ++c) {
                           dn[c] = g[c] * gv[c];
                           mean_dn += dn[c];
                           mean_dn_xh += dn[c] * xh[c];
                         }
                         mean_dn /= n;
                         mean_dn_xh /= n;
                         for (std::size_t c = 0; c < cols; ++c)
                           gx[r * cols + c] += inv_std[r] * (dn[c] - mean_dn - xh[c] * mean_dn_xh);
                       }
                     });
}

}  // namespace summ::ag
