#include <doctest.h>

#include <cmath>

#include "summ/pointer.hpp"
#include "summ/summarizer.hpp"

using namespace summ;
using namespace summ::model;
using ag::Tensor;

namespace {

PointerHead zero_head(std::size_t ctx, std::size_t state, std::size_t input, double bias = 0.0) {
  return {Tensor::zeros({ctx}), Tensor::zeros({state}), Tensor::zeros({input}), Tensor::scalar(bias)};
}

Tensor random_distribution(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  double total = 0.0;
  for (double& x : v) total += (x = rng.uniform() + 1e-3);
  for (double& x : v) x /= total;
  return Tensor::vector(v);
}

}  // namespace

TEST_CASE("generation probability examples") {
  const Tensor ctx = Tensor::vector({0.3, -0.4});
  const Tensor s = Tensor::vector({0.1});
  const Tensor x = Tensor::vector({0.5, 0.5, 0.2});
  CHECK(generation_probability(ctx, s, x, zero_head(2, 1, 3)).item() == 0.5);
  CHECK(generation_probability(ctx, s, x, zero_head(2, 1, 3, 10.0)).item() > 0.99);

  const PointerHead head{Tensor::vector({0.2, -0.1}), Tensor::vector({0.7}), Tensor::vector({-0.3, 0.1, 0.4}),
                         Tensor::scalar(0.05)};
  const double z = 0.2 * 0.3 + 0.1 * 0.4 + 0.7 * 0.1 - 0.15 + 0.05 + 0.08 + 0.05;
  CHECK(std::abs(generation_probability(ctx, s, x, head).item() - 1.0 / (1.0 + std::exp(-z))) < 1e-12);
  CHECK_THROWS_AS(generation_probability(ctx, s, Tensor::vector({1.0}), head), ShapeError);
}

TEST_CASE("final distribution examples") {
  const Tensor pv = Tensor::vector({0.1, 0.2, 0.3, 0.4});
  const std::vector<int> ids{2, 4};
  const Tensor a = Tensor::vector({0.7, 0.3});

  const Tensor gen = final_distribution(Tensor::scalar(1.0), pv, a, ids, 1);
  REQUIRE(gen.size() == 5);
  for (std::size_t w = 0; w < 4; ++w) CHECK(gen[w] == pv[w]);
  CHECK(gen[4] == 0.0);

  const std::vector<int> same{3, 3};
  const Tensor copy = final_distribution(Tensor::scalar(0.0), pv, a, same, 0);
  CHECK(copy[3] == doctest::Approx(1.0).epsilon(1e-15));

  const Tensor pv2 = Tensor::vector({0.5, 0.5});
  const std::vector<int> mix{0, 1, 1};
  const Tensor m = final_distribution(Tensor::scalar(0.6), pv2, Tensor::vector({0.2, 0.5, 0.3}), mix, 0);
  CHECK(m[0] == doctest::Approx(0.38).epsilon(1e-14));

  const std::vector<int> bad{7};
  CHECK_THROWS(final_distribution(Tensor::scalar(0.5), pv, Tensor::vector({1.0}), bad, 1));
}

TEST_CASE("final distribution is monotone in p_gen for generation-heavy words") {
  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t V = 3 + rng.index(5), n = 1 + rng.index(5), oov = rng.index(3);
    const Tensor pv = random_distribution(rng, V);
    const Tensor a = random_distribution(rng, n);
    std::vector<int> ids(n);
    for (int& id : ids) id = static_cast<int>(rng.index(V + oov));
    const double lo = rng.uniform(0.0, 0.9);
    const double hi = lo + rng.uniform(0.01, 1.0 - lo);
    const Tensor p_lo = final_distribution(Tensor::scalar(lo), pv, a, ids, oov);
    const Tensor p_hi = final_distribution(Tensor::scalar(hi), pv, a, ids, oov);
    for (std::size_t w = 0; w < V; ++w) {
      double copy_mass = 0.0;
      for (std::size_t i = 0; i < n; ++i) copy_mass += ids[i] == static_cast<int>(w) ? a[i] : 0.0;
      if (pv[w] > copy_mass + 1e-12) CHECK(p_hi[w] > p_lo[w]);
    }
  }
}

TEST_CASE("coverage update and loss examples") {
  CoverageState c = CoverageState::initial(2);
  CHECK(c.t == 0);
  CHECK(c.c[0] == 0.0);
  c = coverage_update(c, Tensor::vector({0.5, 0.5}));
  c = coverage_update(c, Tensor::vector({0.2, 0.8}));
  CHECK(c.t == 2);
  CHECK(c.c[0] == doctest::Approx(0.7));
  CHECK(c.c[1] == doctest::Approx(1.3));
  CHECK_THROWS_AS(coverage_update(c, Tensor::vector({1.0})), ShapeError);

  CHECK(coverage_loss(Tensor::vector({0.6, 0.4}), Tensor::zeros({2})).item() == 0.0);
  CHECK(coverage_loss(Tensor::vector({0.6, 0.4}), Tensor::vector({0.6, 0.4})).item() == doctest::Approx(1.0));
  CHECK(coverage_loss(Tensor::vector({0.6, 0.4}), Tensor::vector({0.1, 2.0})).item() == doctest::Approx(0.5));
  CHECK_THROWS_AS(coverage_loss(Tensor::vector({1.0}), Tensor::zeros({2})), ShapeError);
}

TEST_CASE("total loss examples") {
  const std::vector<Tensor> nll{Tensor::scalar(1.0), Tensor::scalar(1.0)};
  CHECK(total_loss(nll, {Tensor::scalar(0.5), Tensor::scalar(0.5)}).item() == 1.5);
  CHECK(total_loss(nll, {Tensor::scalar(0.0), Tensor::scalar(0.0)}).item() == sequence_loss(nll).item());
  CHECK(total_loss({Tensor::scalar(0.25)}, {Tensor::scalar(0.5)}).item() == 0.75);
  CHECK_THROWS(total_loss(nll, {Tensor::scalar(0.0)}));
}

TEST_CASE("coverage algebra properties") {
  Rng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.index(12);
    CoverageState c = CoverageState::initial(n);
    const std::size_t steps = 1 + rng.index(15);
    for (std::size_t t = 0; t < steps; ++t) {
      const Tensor a = random_distribution(rng, n);
      const double loss = coverage_loss(a, c.c).item();
      CHECK(loss >= 0.0);
      CHECK(loss <= 1.0 + 1e-12);
      c = coverage_update(c, a);
    }
    double total = 0.0;
    for (double v : c.c.data()) {
      CHECK(v >= 0.0);
      CHECK(v <= static_cast<double>(steps) + 1e-12);
      total += v;
    }
    CHECK(std::abs(total - static_cast<double>(steps)) < 1e-6);
  }
}

TEST_CASE("attention reads the coverage from before the current step") {
  const auto pairs = toy_pairs();
  const auto on = make_summarizer(toy_config(ModelKind::PointerCoverage, 12), 8);
  const auto off = make_summarizer(toy_config(ModelKind::PointerCoverage, 12), 8);
  on->set_coverage_active(true);
  const auto s_on = on->begin(pairs[1]);
  const auto s_off = off->begin(pairs[1]);
  const StepOutput a_on = s_on->step(s_on->initial(), text::Vocabulary::kStart);
  const StepOutput a_off = s_off->step(s_off->initial(), text::Vocabulary::kStart);
  // c_0 = 0, so the first step cannot see the coverage weight.
  CHECK(a_on.next.attention == a_off.next.attention);
  for (std::size_t i = 0; i < a_on.next.attention.size(); ++i) {
    CHECK(a_on.next.coverage[i] == doctest::Approx(a_on.next.attention[i]).epsilon(1e-15));
  }
  const StepOutput b_on = s_on->step(a_on.next, 9);
  const StepOutput b_off = s_off->step(a_off.next, 9);
  CHECK(b_on.next.attention != b_off.next.attention);
}

TEST_CASE("copy models place OOV mass in extended slots") {
  const auto pairs = toy_pairs();
  const auto& pair = pairs[0];
  REQUIRE(pair.article_oovs.size() == 2);
  const auto m = make_summarizer(toy_config(ModelKind::Pointer, 12), 2);
  const auto session = m->begin(pair);
  CHECK(session->extended_size() == 14);
  const StepOutput out = session->step(session->initial(), text::Vocabulary::kStart);
  double total = 0.0;
  for (double lp : out.log_probs) total += std::exp(lp);
  CHECK(std::abs(total - 1.0) < 1e-9);
  CHECK(std::exp(out.log_probs[12]) > 0.0);
  CHECK(out.next.p_gen > 0.0);
  CHECK(out.next.p_gen < 1.0);
}

TEST_CASE("pointer and pointer-coverage gradients") {
  for (const auto& c : model_grad_cases()) {
    if (c.name != "model:pointer" && c.name != "model:pointer-coverage") continue;
    CAPTURE(c.name);
    CHECK(c.run().max_rel_error < 1e-4);
  }
}
