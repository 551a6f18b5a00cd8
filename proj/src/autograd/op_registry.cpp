#include <cmath>

#include "summ/gradcheck.hpp"

namespace summ::ag {
namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v));
}

// Values at least `margin` away from `kink`, so finite differences never straddle it.
Tensor away_from(Rng& rng, Shape shape, double kink, double margin) {
  std::vector<double> v(shape_size(shape));
  for (double& x : v) {
    const double mag = rng.uniform(margin, 1.0);
    x = kink + (rng.uniform() < 0.5 ? -mag : mag);
  }
  return Tensor::from(std::move(shape), std::move(v));
}

std::size_t small_dim(Rng& rng) { return 2 + rng.index(4); }  // 2..5

// Random fixed projection so the scalar loss depends on every output entry differently.
Tensor project(const Tensor& out, std::uint64_t seed) {
  Rng rng(seed);
  return sum(mul(out, random_tensor(rng, out.shape())));
}

GradCase make_case(std::string name, std::uint64_t seed,
                   std::function<std::vector<Tensor>(Rng&)> inputs,
                   std::function<Tensor(const std::vector<Tensor>&)> op) {
  return GradCase{name, [seed, inputs, op]() {
                    Rng rng(seed);
                    std::vector<Tensor> point = inputs(rng);
                    const std::uint64_t proj_seed = rng.next();
                    return grad_check([&](const std::vector<Tensor>& x) { return project(op(x), proj_seed); },
                                      point);
                  }};
}

}  // namespace

std::vector<GradCase> op_grad_cases(std::uint64_t seed) {
  std::vector<GradCase> cases;
  std::uint64_t s = seed;
  auto next = [&]() { return s++; };

  cases.push_back(make_case("matmul(m,k)x(k,n)", next(),
                            [](Rng& r) {
                              const auto m = small_dim(r), k = small_dim(r), n = small_dim(r);
                              return std::vector{random_tensor(r, {m, k}), random_tensor(r, {k, n})};
                            },
                            [](const auto& x) { return matmul(x[0], x[1]); }));
  cases.push_back(make_case("matmul(m,k)x(k)", next(),
                            [](Rng& r) {
                              const auto m = small_dim(r), k = small_dim(r);
                              return std::vector{random_tensor(r, {m, k}), random_tensor(r, {k})};
                            },
                            [](const auto& x) { return matmul(x[0], x[1]); }));
  cases.push_back(make_case("matmul(k)x(k,n)", next(),
                            [](Rng& r) {
                              const auto k = small_dim(r), n = small_dim(r);
                              return std::vector{random_tensor(r, {k}), random_tensor(r, {k, n})};
                            },
                            [](const auto& x) { return matmul(x[0], x[1]); }));
  cases.push_back(make_case("transpose", next(),
                            [](Rng& r) { return std::vector{random_tensor(r, {small_dim(r), small_dim(r)})}; },
                            [](const auto& x) { return transpose(x[0]); }));
  cases.push_back(make_case("add", next(),
                            [](Rng& r) {
                              Shape sh{small_dim(r), small_dim(r)};
                              return std::vector{random_tensor(r, sh), random_tensor(r, sh)};
                            },
                            [](const auto& x) { return add(x[0], x[1]); }));
  cases.push_back(make_case("add(row broadcast)", next(),
                            [](Rng& r) {
                              const auto m = small_dim(r), n = small_dim(r);
                              return std::vector{random_tensor(r, {m, n}), random_tensor(r, {n})};
                            },
                            [](const auto& x) { return add(x[0], x[1]); }));
  cases.push_back(make_case("add(scalar broadcast)", next(),
                            [](Rng& r) { return std::vector{random_tensor(r, {small_dim(r)}), random_tensor(r, {})}; },
                            [](const auto& x) { return add(x[1], x[0]); }));
  cases.push_back(make_case("sub", next(),
                            [](Rng& r) {
                              Shape sh{small_dim(r)};
                              return std::vector{random_tensor(r, sh), random_tensor(r, sh)};
                            },
                            [](const auto& x) { return sub(x[0], x[1]); }));
  cases.push_back(make_case("mul", next(),
                            [](Rng& r) {
                              Shape sh{small_dim(r), small_dim(r)};
                              return std::vector{random_tensor(r, sh), random_tensor(r, sh)};
                            },
                            [](const auto& x) { return mul(x[0], x[1]); }));
  cases.push_back(make_case("mul(row broadcast)", next(),
                            [](Rng& r) {
                              const auto m = small_dim(r), n = small_dim(r);
                              return std::vector{random_tensor(r, {m, n}), random_tensor(r, {n})};
                            },
                            [](const auto& x) { return mul(x[0], x[1]); }));
  cases.push_back(make_case("mul(scalar broadcast)", next(),
                            [](Rng& r) { return std::vector{random_tensor(r, {small_dim(r)}), random_tensor(r, {})}; },
                            [](const auto& x) { return mul(x[1], x[0]); }));
  cases.push_back(make_case("tanh", next(), [](Rng& r) { return std::vector{random_tensor(r, {small_dim(r)})}; },
                            [](const auto& x) { return tanh(x[0]); }));
  cases.push_back(make_case("sigmoid", next(), [](Rng& r) { return std::vector{random_tensor(r, {small_dim(r)})}; },
                            [](const auto& x) { return sigmoid(x[0]); }));
  cases.push_back(make_case("relu", next(),
                            [](Rng& r) { return std::vector{away_from(r, {small_dim(r)}, 0.0, 0.05)}; },
                            [](const auto& x) { return relu(x[0]); }));
  cases.push_back(make_case("exp", next(), [](Rng& r) { return std::vector{random_tensor(r, {small_dim(r)})}; },
                            [](const auto& x) { return exp(x[0]); }));
  cases.push_back(make_case("log", next(),
                            [](Rng& r) { return std::vector{random_tensor(r, {small_dim(r)}, 0.2, 1.5)}; },
                            [](const auto& x) { return log(x[0]); }));
  cases.push_back(make_case("neg", next(), [](Rng& r) { return std::vector{random_tensor(r, {small_dim(r)})}; },
                            [](const auto& x) { return neg(x[0]); }));
  cases.push_back(make_case("scale", next(), [](Rng& r) { return std::vector{random_tensor(r, {small_dim(r)})}; },
                            [](const auto& x) { return scale(x[0], -1.7); }));
  cases.push_back(make_case("add_scalar", next(),
                            [](Rng& r) { return std::vector{random_tensor(r, {small_dim(r)})}; },
                            [](const auto& x) { return add_scalar(x[0], 0.3); }));
  cases.push_back(make_case("clamp_min", next(),
                            [](Rng& r) { return std::vector{away_from(r, {small_dim(r)}, 0.1, 0.05)}; },
                            [](const auto& x) { return clamp_min(x[0], 0.1); }));
  cases.push_back(make_case("minimum", next(),
                            [](Rng& r) {
                              const auto n = small_dim(r);
                              Tensor a = random_tensor(r, {n});
                              Tensor gap = away_from(r, {n}, 0.0, 0.05);
                              std::vector<double> b(n);
                              for (std::size_t i = 0; i < n; ++i) b[i] = a[i] + gap[i];
                              return std::vector{a, Tensor::vector(b)};
                            },
                            [](const auto& x) { return minimum(x[0], x[1]); }));
  cases.push_back(make_case("softmax", next(),
                            [](Rng& r) { return std::vector{random_tensor(r, {small_dim(r), small_dim(r)})}; },
                            [](const auto& x) { return softmax(x[0]); }));
  cases.push_back(make_case("softmax(masked)", next(),
                            [](Rng& r) { return std::vector{random_tensor(r, {4, 4})}; },
                            [](const auto& x) {
                              std::vector<bool> mask(16);
                              for (std::size_t i = 0; i < 4; ++i)
                                for (std::size_t j = 0; j < 4; ++j) mask[i * 4 + j] = j <= i;
                              return softmax(x[0], &mask);
                            }));
  cases.push_back(make_case("concat(axis 0)", next(),
                            [](Rng& r) {
                              const auto n = small_dim(r);
                              return std::vector{random_tensor(r, {small_dim(r), n}), random_tensor(r, {small_dim(r), n})};
                            },
                            [](const auto& x) { return concat({x[0], x[1]}, 0); }));
  cases.push_back(make_case("concat(axis 1)", next(),
                            [](Rng& r) {
                              const auto m = small_dim(r);
                              return std::vector{random_tensor(r, {m, small_dim(r)}), random_tensor(r, {m, small_dim(r)})};
                            },
                            [](const auto& x) { return concat({x[0], x[1]}, 1); }));
  cases.push_back(make_case("stack", next(),
                            [](Rng& r) {
                              const auto n = small_dim(r);
                              return std::vector{random_tensor(r, {n}), random_tensor(r, {n}), random_tensor(r, {n})};
                            },
                            [](const auto& x) { return stack({x[0], x[1], x[2]}); }));
  cases.push_back(make_case("slice", next(), [](Rng& r) { return std::vector{random_tensor(r, {4, 5})}; },
                            [](const auto& x) { return slice(x[0], 1, 1, 4); }));
  cases.push_back(make_case("reshape", next(), [](Rng& r) { return std::vector{random_tensor(r, {2, 3})}; },
                            [](const auto& x) { return reshape(x[0], {3, 2}); }));
  cases.push_back(make_case("embedding", next(), [](Rng& r) { return std::vector{random_tensor(r, {5, 3})}; },
                            [](const auto& x) {
                              const std::vector<int> ids{4, 0, 4, 2};
                              return embedding(x[0], ids);
                            }));
  cases.push_back(make_case("embedding_row", next(), [](Rng& r) { return std::vector{random_tensor(r, {5, 3})}; },
                            [](const auto& x) { return embedding_row(x[0], 3); }));
  cases.push_back(make_case("sum", next(), [](Rng& r) { return std::vector{random_tensor(r, {small_dim(r), 3})}; },
                            [](const auto& x) { return sum(x[0]); }));
  cases.push_back(make_case("sum(axis)", next(), [](Rng& r) { return std::vector{random_tensor(r, {3, 4})}; },
                            [](const auto& x) { return sum(x[0], 0); }));
  cases.push_back(make_case("mean", next(), [](Rng& r) { return std::vector{random_tensor(r, {small_dim(r)})}; },
                            [](const auto& x) { return mean(x[0]); }));
  cases.push_back(make_case("mean(axis)", next(), [](Rng& r) { return std::vector{random_tensor(r, {3, 4})}; },
                            [](const auto& x) { return mean(x[0], 1); }));
  cases.push_back(make_case("pick", next(), [](Rng& r) { return std::vector{random_tensor(r, {5})}; },
                            [](const auto& x) { return pick(x[0], 3); }));
  cases.push_back(make_case("scatter_add", next(), [](Rng& r) { return std::vector{random_tensor(r, {4})}; },
                            [](const auto& x) {
                              const std::vector<int> ids{1, 3, 1, 0};
                              return scatter_add(x[0], ids, 5);
                            }));
  cases.push_back(make_case("outer", next(),
                            [](Rng& r) { return std::vector{random_tensor(r, {small_dim(r)}), random_tensor(r, {small_dim(r)})}; },
                            [](const auto& x) { return outer(x[0], x[1]); }));
  cases.push_back(make_case("layer_norm", next(),
                            [](Rng& r) {
                              const auto n = small_dim(r);
                              return std::vector{random_tensor(r, {3, n}), random_tensor(r, {n}), random_tensor(r, {n})};
                            },
                            [](const auto& x) { return layer_norm(x[0], x[1], x[2], 1e-6); }));
  return cases;
}

}  // namespace summ::ag
