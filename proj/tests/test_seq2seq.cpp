#include <doctest.h>

#include <cmath>

#include "summ/decoding.hpp"
#include "summ/seq2seq.hpp"
#include "summ/summarizer.hpp"

using namespace summ;
using namespace summ::model;
using ag::Tensor;

namespace {

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void fill(Tensor t, double value) {
  for (double& v : t.mutable_data()) v = value;
}

struct Toy {
  ParamStore store;
  EncoderParams enc;
  AttentionParams attn;
  OutputProjection proj;
  std::size_t V = 10, E = 4, h = 3, a = 5, p = 4;

  explicit Toy(std::uint64_t seed, bool coverage = false) {
    Rng rng(seed);
    enc.embedding = store.uniform("embedding", {V, E}, rng, 0.5);
    enc.forward = LstmCell::create(store, "fw", E, h, rng);
    enc.backward = LstmCell::create(store, "bw", E, h, rng);
    enc.init_h_weight = store.uniform("rh", {h, 2 * h}, rng, 0.5);
    enc.init_h_bias = store.uniform("rhb", {h}, rng, 0.5);
    enc.init_c_weight = store.uniform("rc", {h, 2 * h}, rng, 0.5);
    enc.init_c_bias = store.uniform("rcb", {h}, rng, 0.5);
    attn.enc_weight = store.uniform("wh", {a, 2 * h}, rng, 0.5);
    attn.dec_weight = store.uniform("ws", {a, h}, rng, 0.5);
    attn.bias = store.uniform("battn", {a}, rng, 0.5);
    attn.v = store.uniform("v", {a}, rng, 0.5);
    if (coverage) attn.coverage_weight = store.uniform("wc", {a}, rng, 0.5);
    proj.hidden_weight = store.uniform("V", {p, 3 * h}, rng, 0.5);
    proj.hidden_bias = store.uniform("b", {p}, rng, 0.5);
    proj.vocab_weight = store.uniform("V2", {V, p}, rng, 0.5);
    proj.vocab_bias = store.uniform("b2", {V}, rng, 0.5);
  }
};

Tensor random_vector(Rng& rng, std::size_t n, double range = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-range, range);
  return Tensor::vector(v);
}

}  // namespace

TEST_CASE("lstm_step with zero parameters") {
  ParamStore store;
  Rng rng(1);
  LstmCell cell = LstmCell::create(store, "c", 2, 3, rng);
  fill(cell.weight, 0.0);
  fill(cell.bias, 0.0);
  const LstmState out = lstm_step(cell, Tensor::vector({0.3, -0.2}), LstmState::zeros(3));
  for (double v : out.h.data()) CHECK(v == 0.0);
  for (double v : out.c.data()) CHECK(v == 0.0);
  CHECK(out.h.shape() == ag::Shape{3});
}

TEST_CASE("lstm_step matches hand gate algebra") {
  ParamStore store;
  Rng rng(1);
  LstmCell cell = LstmCell::create(store, "c", 1, 1, rng);  // weight (4, 2)
  const double w[] = {0.5, -0.3, 0.2, 0.1, -0.4, 0.6, 1.0, 0.7};
  const double b[] = {0.1, 1.0, -0.2, 0.05};
  std::copy(std::begin(w), std::end(w), cell.weight.mutable_data().begin());
  std::copy(std::begin(b), std::end(b), cell.bias.mutable_data().begin());
  const double x = 0.8, h0 = -0.5, c0 = 0.25;
  const LstmState out = lstm_step(cell, Tensor::vector({x}), {Tensor::vector({h0}), Tensor::vector({c0})});
  const double i = sigm(w[0] * x + w[1] * h0 + b[0]);
  const double f = sigm(w[2] * x + w[3] * h0 + b[1]);
  const double o = sigm(w[4] * x + w[5] * h0 + b[2]);
  const double g = std::tanh(w[6] * x + w[7] * h0 + b[3]);
  const double c = f * c0 + i * g;
  CHECK(out.c[0] == doctest::Approx(c).epsilon(1e-14));
  CHECK(out.h[0] == doctest::Approx(o * std::tanh(c)).epsilon(1e-14));
}

TEST_CASE("forget bias starts at one") {
  ParamStore store;
  Rng rng(1);
  const LstmCell cell = LstmCell::create(store, "c", 2, 3, rng);
  for (std::size_t k = 0; k < 12; ++k) CHECK(cell.bias[k] == (k >= 3 && k < 6 ? 1.0 : 0.0));
  CHECK_THROWS_AS(lstm_step(cell, Tensor::vector({1.0}), LstmState::zeros(3)), ShapeError);
}

TEST_CASE("encoder shapes, direction and determinism") {
  Toy toy(3);
  const std::vector<int> one{5};
  const EncoderStates s1 = encode(one, toy.enc);
  CHECK(s1.length() == 1);
  CHECK(s1.states.shape() == ag::Shape{1, 2 * toy.h});

  const std::vector<int> ids{4, 7, 2, 9};
  const std::vector<int> rev{9, 2, 7, 4};
  const EncoderStates fwd = encode(ids, toy.enc);
  // With shared cell weights the backward pass over ids equals the forward pass over rev.
  Toy mirrored(3);
  mirrored.enc.backward = mirrored.enc.forward;
  const EncoderStates mf = encode(ids, mirrored.enc);
  const EncoderStates mr = encode(rev, mirrored.enc);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto a = mf.backward_h[i].data();
    const auto b = mr.forward_h[ids.size() - 1 - i].data();
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t k = 0; k < toy.h; ++k) {
      CHECK(fwd.states[i * 2 * toy.h + k] == fwd.forward_h[i][k]);
      CHECK(fwd.states[i * 2 * toy.h + toy.h + k] == fwd.backward_h[i][k]);
    }
  }
  const EncoderStates again = encode(ids, Toy(3).enc);
  for (std::size_t k = 0; k < fwd.states.size(); ++k) CHECK(again.states[k] == fwd.states[k]);
  CHECK_THROWS(encode(std::vector<int>{}, toy.enc));
}

TEST_CASE("attention examples and independent oracle") {
  Toy toy(5, true);
  Rng rng(6);
  const std::vector<int> ids{1, 4, 8, 3, 3};
  const EncoderStates enc = encode(ids, toy.enc);
  const Tensor feats = attention_features(enc.states, toy.attn);
  const Tensor s = random_vector(rng, toy.h);

  const Attention plain = attention_scores(feats, s, toy.attn);
  const Tensor zero_cov = Tensor::zeros({ids.size()});
  const Attention with_zero = attention_scores(feats, s, toy.attn, &zero_cov);
  for (std::size_t i = 0; i < ids.size(); ++i) CHECK(plain.weights[i] == with_zero.weights[i]);

  const Tensor cov = random_vector(rng, ids.size());
  const Attention covered = attention_scores(feats, s, toy.attn, &cov);
  std::vector<double> e(ids.size());
  double zmax = -1e300;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    double score = 0.0;
    for (std::size_t r = 0; r < toy.a; ++r) {
      double pre = toy.attn.bias[r] + toy.attn.coverage_weight[r] * cov[i];
      for (std::size_t c = 0; c < 2 * toy.h; ++c) pre += toy.attn.enc_weight[r * 2 * toy.h + c] * enc.states[i * 2 * toy.h + c];
      for (std::size_t c = 0; c < toy.h; ++c) pre += toy.attn.dec_weight[r * toy.h + c] * s[c];
      score += toy.attn.v[r] * std::tanh(pre);
    }
    e[i] = score;
    zmax = std::max(zmax, score);
  }
  double z = 0.0;
  for (double x : e) z += std::exp(x - zmax);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    CHECK(std::abs(covered.scores[i] - e[i]) < 1e-12);
    CHECK(std::abs(covered.weights[i] - std::exp(e[i] - zmax) / z) < 1e-12);
  }

  fill(toy.attn.v, 0.0);
  const Attention uniform = attention_scores(feats, s, toy.attn);
  for (double w : uniform.weights.data()) CHECK(w == doctest::Approx(1.0 / ids.size()).epsilon(1e-15));

  const Tensor short_cov = Tensor::zeros({2});
  CHECK_THROWS_AS(attention_scores(feats, s, toy.attn, &short_cov), ShapeError);
}

TEST_CASE("context_vector examples") {
  const Tensor h = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6});
  const Tensor one_hot = context_vector(Tensor::vector({0, 1, 0}), h);
  CHECK(one_hot[0] == 3.0);
  CHECK(one_hot[1] == 4.0);
  const Tensor mean = context_vector(Tensor::vector({0.5, 0.5}), Tensor::from({2, 2}, {1, 2, 3, 6}));
  CHECK(mean[0] == 2.0);
  CHECK(mean[1] == 4.0);
  Rng rng(2);
  const Tensor a = ag::softmax(random_vector(rng, 3));
  const Tensor r = context_vector(a, h);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(std::abs(r[k] - (a[0] * h[k] + a[1] * h[2 + k] + a[2] * h[4 + k])) < 1e-12);
  }
  CHECK_THROWS_AS(context_vector(Tensor::vector({1.0}), h), ShapeError);
}

TEST_CASE("vocab_distribution examples") {
  Toy toy(9);
  Rng rng(1);
  const Tensor s = random_vector(rng, toy.h);
  const Tensor ctx = random_vector(rng, 2 * toy.h);
  const Tensor p = vocab_distribution(s, ctx, toy.proj);
  double total = 0.0;
  for (double v : p.data()) total += v;
  CHECK(std::abs(total - 1.0) < 1e-9);

  // Swapping two rows of V' and b' swaps the matching probabilities.
  Toy swapped(9);
  auto w = swapped.proj.vocab_weight.mutable_data();
  for (std::size_t c = 0; c < toy.p; ++c) std::swap(w[2 * toy.p + c], w[7 * toy.p + c]);
  std::swap(swapped.proj.vocab_bias.mutable_data()[2], swapped.proj.vocab_bias.mutable_data()[7]);
  const Tensor q = vocab_distribution(s, ctx, swapped.proj);
  CHECK(q[2] == doctest::Approx(p[7]).epsilon(1e-14));
  CHECK(q[7] == doctest::Approx(p[2]).epsilon(1e-14));
  CHECK(q[0] == doctest::Approx(p[0]).epsilon(1e-14));

  fill(toy.proj.vocab_weight, 0.0);
  fill(toy.proj.vocab_bias, 0.0);
  const Tensor uniform = vocab_distribution(s, ctx, toy.proj);
  for (double v : uniform.data()) CHECK(v == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("step and sequence loss examples") {
  CHECK(step_loss(Tensor::vector({0.0, 1.0}), 1).item() == 0.0);
  CHECK(step_loss(Tensor::vector({0.75, 0.25}), 1).item() == doctest::Approx(std::log(4.0)));
  CHECK(step_loss(Tensor::vector({1.0, 0.0}), 1).item() == doctest::Approx(27.631021115928547));
  CHECK_THROWS(step_loss(Tensor::vector({1.0, 0.0}), 2));
  CHECK(sequence_loss({Tensor::scalar(0.0), Tensor::scalar(0.0)}).item() == 0.0);
  CHECK(sequence_loss({Tensor::scalar(1.0), Tensor::scalar(3.0)}).item() == 2.0);
  CHECK(sequence_loss({Tensor::scalar(0.7), Tensor::scalar(0.7), Tensor::scalar(0.7)}).item() ==
        doctest::Approx(0.7).epsilon(1e-15));
  CHECK_THROWS(sequence_loss({}));
}

TEST_CASE("baseline distributions are valid at every decode step") {
  const auto m = make_summarizer(toy_config(ModelKind::Baseline, 12), 4);
  for (const auto& pair : toy_pairs()) {
    const auto session = m->begin(pair);
    CHECK(session->extended_size() == session->vocab_size());
    DecoderStepState state = session->initial();
    int prev = text::Vocabulary::kStart;
    for (int t = 0; t < 6; ++t) {
      StepOutput out = session->step(state, prev);
      REQUIRE(out.log_probs.size() == 12);
      double total = 0.0;
      for (double lp : out.log_probs) total += std::exp(lp);
      CHECK(std::abs(total - 1.0) < 1e-9);
      double asum = 0.0;
      for (double a : out.next.attention) {
        CHECK(a >= 0.0);
        asum += a;
      }
      CHECK(std::abs(asum - 1.0) < 1e-9);
      prev = static_cast<int>(std::max_element(out.log_probs.begin(), out.log_probs.end()) - out.log_probs.begin());
      state = std::move(out.next);
    }
  }
}

TEST_CASE("baseline never emits an id outside the fixed vocabulary") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto m = make_summarizer(toy_config(ModelKind::Baseline, 12), seed);
    for (const auto& pair : toy_pairs()) {
      const auto h = decode::beam_search(*m, pair, {3, 0, 8, 0.0});
      for (int id : h.tokens) CHECK(id < 12);
    }
  }
}

TEST_CASE("teacher-forced loss is deterministic and gradients are correct") {
  const auto pairs = toy_pairs();
  const auto a = make_summarizer(toy_config(ModelKind::Baseline, 12), 11);
  const auto b = make_summarizer(toy_config(ModelKind::Baseline, 12), 11);
  CHECK(a->loss(pairs[0]).item() == b->loss(pairs[0]).item());
  for (const auto& c : model_grad_cases()) {
    if (c.name != "model:baseline") continue;
    CHECK(c.run().max_rel_error < 1e-4);
  }
}
