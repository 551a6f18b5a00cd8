// Prints one PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "summ/classifier.hpp"
#include "summ/decoding.hpp"
#include "summ/gradcheck.hpp"
#include "summ/pointer.hpp"
#include "summ/rouge.hpp"
#include "summ/seq2seq.hpp"
#include "summ/summarizer.hpp"
#include "summ/training.hpp"
#include "summ/transformer.hpp"

using namespace summ;
using model::ModelKind;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ag::Tensor random_vector(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return ag::Tensor::vector(std::move(v));
}

ag::Tensor random_matrix(Rng& rng, std::size_t r, std::size_t c, double range = 1.0) {
  std::vector<double> v(r * c);
  for (double& x : v) x = rng.uniform(-range, range);
  return ag::Tensor::from({r, c}, std::move(v));
}

ag::Tensor random_distribution(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  double z = 0.0;
  for (double& x : v) z += (x = rng.uniform() + 1e-3);
  for (double& x : v) x /= z;
  return ag::Tensor::vector(std::move(v));
}

bool is_distribution(std::span<const double> p, double tol) {
  double s = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) return false;
    s += x;
  }
  return std::abs(s - 1.0) <= tol;
}

// ---- 1 ---------------------------------------------------------------------------

Outcome gradients() {
  const auto start = Clock::now();
  auto cases = ag::op_grad_cases();
  for (auto& c : model::model_grad_cases()) cases.push_back(std::move(c));
  double worst = 0.0;
  std::string worst_name;
  for (const auto& c : cases) {
    const double e = c.run().max_rel_error;
    if (!(e <= worst)) {
      worst = e;
      worst_name = c.name;
    }
  }
  const double t = seconds_since(start);
  return {worst < 1e-4 && t < 60.0,
          fmt("%zu cases, max relative error %.2e (%s), %.1f s", cases.size(), worst, worst_name.c_str(), t)};
}

// ---- 2 ---------------------------------------------------------------------------

Outcome distributions() {
  Rng rng(2024);
  const int trials = 1000;
  int failures = 0;
  std::string first;
  auto fail = [&](int trial, const char* what) {
    if (failures++ == 0) first = fmt("trial %d: %s", trial, what);
  };
  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t n = 1 + rng.index(12), h = 1 + rng.index(6), a = 1 + rng.index(6), p = 1 + rng.index(6);
    const std::size_t vocab = 2 + rng.index(20), n_oov = rng.index(4);
    const double range = trial % 10 == 0 ? 8.0 : 1.0;

    model::AttentionParams att{random_matrix(rng, a, 2 * h, range), random_matrix(rng, a, h, range),
                               random_vector(rng, a), random_vector(rng, a, -range, range), {}};
    const ag::Tensor enc = random_matrix(rng, n, 2 * h);
    const ag::Tensor dec = random_vector(rng, h);
    const ag::Tensor weights = model::attention_scores(model::attention_features(enc, att), dec, att).weights;

    model::OutputProjection proj{random_matrix(rng, p, 3 * h, range), random_vector(rng, p),
                                 random_matrix(rng, vocab, p, range), random_vector(rng, vocab)};
    const ag::Tensor ctx = model::context_vector(weights, enc);
    const ag::Tensor p_vocab = model::vocab_distribution(dec, ctx, proj);

    std::vector<int> ext(n);
    for (int& id : ext) id = static_cast<int>(rng.index(vocab + n_oov));
    const ag::Tensor p_gen = ag::Tensor::scalar(rng.uniform());
    const ag::Tensor final_dist = model::final_distribution(p_gen, p_vocab, weights, ext, n_oov);

    if (!is_distribution(weights.data(), 1e-9)) fail(trial, "a_t");
    if (!is_distribution(p_vocab.data(), 1e-9)) fail(trial, "P_vocab");
    if (!is_distribution(final_dist.data(), 1e-9)) fail(trial, "P_final");
    if (final_dist.size() != vocab + n_oov) fail(trial, "P_final size");

    const ag::Tensor gen_only = model::final_distribution(ag::Tensor::scalar(1.0), p_vocab, weights, ext, n_oov);
    for (std::size_t w = 0; w < vocab + n_oov; ++w) {
      if (gen_only[w] != (w < vocab ? p_vocab[w] : 0.0)) {
        fail(trial, "p_gen=1 differs from padded P_vocab");
        break;
      }
    }
    std::vector<double> scatter(vocab + n_oov, 0.0);
    for (std::size_t i = 0; i < n; ++i) scatter[ext[i]] += weights[i];
    const ag::Tensor copy_only = model::final_distribution(ag::Tensor::scalar(0.0), p_vocab, weights, ext, n_oov);
    for (std::size_t w = 0; w < vocab + n_oov; ++w) {
      if (copy_only[w] != scatter[w]) {
        fail(trial, "p_gen=0 differs from the attention scatter");
        break;
      }
    }
  }
  return {failures == 0, failures ? fmt("%d failures, first %s", failures, first.c_str())
                                  : fmt("%d random cases", trials)};
}

// ---- 3 ---------------------------------------------------------------------------

Outcome coverage() {
  Rng rng(33);
  int failures = 0;
  const int trials = 1000;
  double worst_sum = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t n = 1 + rng.index(15), steps = 1 + rng.index(12);
    model::CoverageState state = model::CoverageState::initial(n);
    for (std::size_t t = 0; t < steps; ++t) {
      const ag::Tensor a = random_distribution(rng, n);
      const double loss = model::coverage_loss(a, state.c).item();
      if (!(loss >= 0.0 && loss <= 1.0 + 1e-12)) ++failures;
      if (t == 0 && loss != 0.0) ++failures;
      state = model::coverage_update(state, a);
      double s = 0.0;
      for (double x : state.c.data()) s += x;
      worst_sum = std::max(worst_sum, std::abs(s - static_cast<double>(t + 1)));
      if (state.t != t + 1) ++failures;
    }
    const ag::Tensor a = random_distribution(rng, n);
    if (model::coverage_loss(a, ag::Tensor::zeros({n})).item() != 0.0) ++failures;
    if (std::abs(model::coverage_loss(a, a).item() - 1.0) > 1e-12) ++failures;
  }
  if (worst_sum > 1e-6) ++failures;
  return {failures == 0, fmt("%d sequences, max |sum c_t - t| %.1e, %d failures", trials, worst_sum, failures)};
}

// ---- 4 ---------------------------------------------------------------------------

struct CopyData {
  text::Vocabulary vocab;
  std::vector<text::EncodedPair> train, held_out;
};

CopyData copy_task(std::uint64_t seed) {
  std::vector<std::pair<text::Token, std::uint64_t>> counts;
  for (int i = 0; i < 20; ++i) counts.emplace_back(fmt("w%02d", i), 100);
  CopyData d{text::Vocabulary::from_counts(counts, 28), {}, {}};
  Rng rng(seed);
  auto make = [&] {
    text::Tokens article(8);
    for (auto& w : article) w = rng.uniform() < 0.3 ? fmt("oov%03zu", rng.index(500)) : fmt("w%02zu", rng.index(20));
    const text::Tokens summary(article.begin(), article.begin() + 3);
    return text::encode_pair(article, summary, d.vocab);
  };
  for (int i = 0; i < 200; ++i) d.train.push_back(make());
  for (int i = 0; i < 100; ++i) d.held_out.push_back(make());
  return d;
}

model::SummarizerConfig small_config(ModelKind kind, std::size_t vocab, std::size_t hidden) {
  model::SummarizerConfig c;
  c.kind = kind;
  c.vocab_size = vocab;
  c.embedding_dim = 16;
  c.hidden_size = hidden;
  c.attention_size = hidden;
  c.projection_size = hidden;
  c.transformer.vocab_size = vocab;
  c.transformer.d_model = 32;
  c.transformer.heads = 4;
  c.transformer.layers = 1;
  c.transformer.ffn_size = 64;
  return c;
}

struct CopyScore {
  double token_accuracy = 0.0;
  std::size_t oov_positions = 0;
  std::size_t oov_as_unk = 0;
  std::size_t ids_out_of_range = 0;
};

CopyScore score_copy(const model::Summarizer& m, const std::vector<text::EncodedPair>& pairs, std::size_t vocab) {
  CopyScore s;
  std::size_t hits = 0, total = 0;
  for (const auto& p : pairs) {
    const auto h = decode::greedy_decode(m, p, {1, 3, 4, 0.0});
    const auto ids = decode::strip_stop(h.tokens);
    for (std::size_t i = 0; i < p.summary_ext_ids.size(); ++i) {
      const int got = i < ids.size() ? ids[i] : -1;
      hits += got == p.summary_ext_ids[i];
      ++total;
      if (p.summary_ids[i] == text::Vocabulary::kUnk) {
        ++s.oov_positions;
        s.oov_as_unk += got == text::Vocabulary::kUnk;
      }
    }
    for (int id : h.tokens) s.ids_out_of_range += id >= static_cast<int>(vocab);
  }
  s.token_accuracy = static_cast<double>(hits) / static_cast<double>(total);
  return s;
}

Outcome copy_capability() {
  const auto start = Clock::now();
  const CopyData d = copy_task(404);
  const std::size_t v = d.vocab.size();

  auto pointer = model::make_summarizer(small_config(ModelKind::Pointer, v, 32), 11);
  train::TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.max_iterations = 10000;
  cfg.eval_interval = 250;
  cfg.seed = 5;
  double accuracy = 0.0;
  std::size_t iterations = 0;
  cfg.stop_when = [&](const train::LossRow& row) {
    iterations = row.iteration;
    accuracy = score_copy(*pointer, d.held_out, v).token_accuracy;
    return accuracy >= 0.95;
  };
  train::train_loop(cfg, *pointer, d.train, d.held_out, d.vocab.hash());

  auto baseline = model::make_summarizer(small_config(ModelKind::Baseline, v, 32), 11);
  cfg.max_iterations = 1500;
  cfg.stop_when = nullptr;
  train::train_loop(cfg, *baseline, d.train, d.held_out, d.vocab.hash());
  const CopyScore b = score_copy(*baseline, d.held_out, v);

  const double t = seconds_since(start);
  const bool pass = accuracy >= 0.95 && b.ids_out_of_range == 0 && b.oov_positions > 0 && t < 600.0;
  return {pass, fmt("pointer held-out token accuracy %.2f%% after %zu iterations; baseline reproduced 0 of %zu OOV "
                    "target tokens (emitted [UNK] at %zu, ids beyond the vocabulary %zu); %.0f s",
                    100.0 * accuracy, iterations, b.oov_positions, b.oov_as_unk, b.ids_out_of_range, t)};
}

// ---- 5 ---------------------------------------------------------------------------

double repeated_bigram_rate(std::span<const int> ids) {
  if (ids.size() < 2) return 0.0;
  std::set<std::pair<int, int>> seen;
  std::size_t repeats = 0;
  for (std::size_t i = 0; i + 1 < ids.size(); ++i) repeats += !seen.insert({ids[i], ids[i + 1]}).second;
  return static_cast<double>(repeats) / static_cast<double>(ids.size() - 1);
}

struct RepetitionData {
  text::Vocabulary vocab;
  std::vector<text::EncodedPair> repetitive, distinct, held_out;
};

// Articles of distinct tokens. Warm-up summaries alternate the first two
// article tokens; the real task copies the first eight in order.
RepetitionData repetition_task(std::uint64_t seed) {
  std::vector<std::pair<text::Token, std::uint64_t>> counts;
  for (int i = 0; i < 30; ++i) counts.emplace_back(fmt("t%02d", i), 100);
  RepetitionData d{text::Vocabulary::from_counts(counts, 38), {}, {}, {}};
  Rng rng(seed);
  auto article = [&] {
    std::vector<int> order(30);
    for (int i = 0; i < 30; ++i) order[i] = i;
    rng.shuffle(order);
    text::Tokens a;
    for (int i = 0; i < 10; ++i) a.push_back(fmt("t%02d", order[i]));
    return a;
  };
  for (int i = 0; i < 150; ++i) {
    const text::Tokens a = article();
    text::Tokens alternating;
    for (int k = 0; k < 8; ++k) alternating.push_back(a[k % 2]);
    d.repetitive.push_back(text::encode_pair(a, alternating, d.vocab));
    const text::Tokens b = article();
    d.distinct.push_back(text::encode_pair(b, text::Tokens(b.begin(), b.begin() + 8), d.vocab));
  }
  for (int i = 0; i < 50; ++i) {
    const text::Tokens a = article();
    d.held_out.push_back(text::encode_pair(a, text::Tokens(a.begin(), a.begin() + 8), d.vocab));
  }
  return d;
}

double mean_repetition(const model::Summarizer& m, const std::vector<text::EncodedPair>& pairs) {
  double total = 0.0;
  for (const auto& p : pairs) {
    const auto h = decode::beam_search(m, p, {4, 8, 9, 0.0});
    total += repeated_bigram_rate(decode::strip_stop(h.tokens));
  }
  return total / static_cast<double>(pairs.size());
}

Outcome repetition() {
  const auto start = Clock::now();
  constexpr std::size_t kWarmup = 300, kTune = 20;
  std::vector<std::string> parts;
  double sum_plain = 0.0, sum_cov = 0.0;
  bool all_lower = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RepetitionData d = repetition_task(100 + seed);
    double rates[2];
    for (int variant = 0; variant < 2; ++variant) {
      const ModelKind kind = variant == 0 ? ModelKind::Pointer : ModelKind::PointerCoverage;
      auto m = model::make_summarizer(small_config(kind, d.vocab.size(), 16), seed);
      train::TrainConfig cfg;
      cfg.batch_size = 4;
      cfg.seed = seed;
      cfg.max_iterations = cfg.eval_interval = kWarmup;
      cfg.cov_start_iteration = kWarmup;
      train::train_loop(cfg, *m, d.repetitive, {}, d.vocab.hash());
      cfg.max_iterations = cfg.eval_interval = kTune;
      cfg.cov_start_iteration = 0;
      cfg.adagrad.learning_rate = 0.05;
      train::train_loop(cfg, *m, d.distinct, {}, d.vocab.hash());
      m->set_coverage_active(true);
      rates[variant] = mean_repetition(*m, d.held_out);
    }
    sum_plain += rates[0];
    sum_cov += rates[1];
    all_lower &= rates[1] < rates[0];
    parts.push_back(fmt("%.3f>%.3f", rates[0], rates[1]));
  }
  std::string detail = "repeated-bigram rate pointer>coverage per seed:";
  for (const auto& p : parts) detail += " " + p;
  detail += fmt("; means %.3f vs %.3f; %.0f s", sum_plain / 5.0, sum_cov / 5.0, seconds_since(start));
  return {all_lower, detail};
}

// ---- 6 ---------------------------------------------------------------------------

bool is_subsequence(const text::Tokens& sub, const text::Tokens& y) {
  std::size_t j = 0;
  for (const auto& w : y) {
    if (j < sub.size() && sub[j] == w) ++j;
  }
  return j == sub.size();
}

std::size_t brute_lcs(const text::Tokens& x, const text::Tokens& y) {
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << x.size()); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) <= best) continue;
    text::Tokens sub;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (mask & (1u << i)) sub.push_back(x[i]);
    }
    if (is_subsequence(sub, y)) best = sub.size();
  }
  return best;
}

std::size_t brute_overlap(const text::Tokens& a, const text::Tokens& b, std::size_t n) {
  std::multiset<text::Tokens> left, right;
  for (std::size_t i = 0; i + n <= a.size(); ++i) left.emplace(a.begin() + i, a.begin() + i + n);
  for (std::size_t i = 0; i + n <= b.size(); ++i) right.emplace(b.begin() + i, b.begin() + i + n);
  std::size_t hits = 0;
  for (const auto& g : left) {
    const auto it = right.find(g);
    if (it != right.end()) {
      right.erase(it);
      ++hits;
    }
  }
  return hits;
}

Outcome rouge_oracle() {
  Rng rng(66);
  int mismatches = 0;
  const int trials = 10000;
  for (int trial = 0; trial < trials; ++trial) {
    text::Tokens a(rng.index(8)), b(rng.index(8));
    const std::size_t alphabet = 2 + rng.index(4);
    for (auto& w : a) w = std::string(1, static_cast<char>('a' + rng.index(alphabet)));
    for (auto& w : b) w = std::string(1, static_cast<char>('a' + rng.index(alphabet)));
    for (std::size_t n : {1u, 2u}) {
      const std::size_t hits = brute_overlap(a, b, n);
      const std::size_t st = a.size() >= n ? a.size() - n + 1 : 0, rt = b.size() >= n ? b.size() - n + 1 : 0;
      const double p = st ? static_cast<double>(hits) / static_cast<double>(st) : 0.0;
      const double r = rt ? static_cast<double>(hits) / static_cast<double>(rt) : 0.0;
      const auto s = rouge::rouge_n(a, b, n);
      mismatches += s.precision != p || s.recall != r || s.f1 != rouge::RougeScore::from(p, r).f1;
    }
    const std::size_t l = brute_lcs(a, b);
    const auto rl = rouge::rouge_l(a, b);
    const double p = a.empty() ? 0.0 : static_cast<double>(l) / static_cast<double>(a.size());
    const double r = b.empty() ? 0.0 : static_cast<double>(l) / static_cast<double>(b.size());
    mismatches += rouge::lcs_length(a, b) != l || rl.precision != p || rl.recall != r ||
                  rl.f1 != rouge::RougeScore::from(p, r).f1;
  }
  const text::Tokens ref{"a", "b", "c", "d"}, sys{"a", "b", "x", "d"};
  const auto r1 = rouge::rouge_n(sys, ref, 1), r2 = rouge::rouge_n(sys, ref, 2);
  const auto rl = rouge::rouge_l(sys, ref);
  const double third = 1.0 / 3.0;
  const bool example = r1.precision == 0.75 && r1.recall == 0.75 && r1.f1 == 0.75 &&
                       std::abs(r2.precision - third) < 1e-15 && std::abs(r2.recall - third) < 1e-15 &&
                       std::abs(r2.f1 - third) < 1e-15 && rl.precision == 0.75 && rl.recall == 0.75 && rl.f1 == 0.75;
  return {mismatches == 0 && example,
          fmt("%d random pairs, %d mismatches; worked example R1 %.2f R2 %.4f RL %.2f", trials, mismatches, r1.f1,
              r2.f1, rl.f1)};
}

// ---- 7 ---------------------------------------------------------------------------

std::vector<text::EncodedPair> overfit_corpus(text::Vocabulary& vocab_out) {
  const char* rows[][2] = {
      {"the storm hit the coast on monday .", "storm hits coast"},
      {"the city council approved a new budget .", "council approves budget"},
      {"heavy rain flooded the main road .", "rain floods road"},
      {"the team won the final match .", "team wins final"},
      {"power was restored to the city .", "power restored"},
      {"the bridge was closed after the crash .", "bridge closed after crash"},
      {"a fire destroyed the old market .", "fire destroys market"},
      {"the school opened a new library .", "school opens library"},
      {"strong wind damaged the harbor .", "wind damages harbor"},
      {"the river rose above the warning level .", "river rises"},
  };
  std::vector<text::RawPair> raw;
  std::vector<text::Tokens> corpus;
  for (const auto& r : rows) {
    raw.push_back({r[0], r[1]});
    corpus.push_back(text::tokenize(r[0]));
    corpus.push_back(text::tokenize(r[1]));
  }
  vocab_out = text::Vocabulary::build(corpus, 200);
  return train::prepare_pairs(raw, vocab_out, false);
}

struct OverfitRun {
  std::vector<train::LossRow> rows;
  std::vector<std::vector<double>> params;
  double final_loss = 0.0;
  std::size_t iterations = 0;
};

OverfitRun overfit(ModelKind kind, const std::vector<text::EncodedPair>& pairs, std::size_t vocab,
                   std::uint64_t hash) {
  auto m = model::make_summarizer(small_config(kind, vocab, 32), 3);
  train::TrainConfig cfg;
  cfg.batch_size = 10;
  cfg.max_iterations = kind == ModelKind::Transformer ? 5000 : 2000;
  cfg.eval_interval = 25;
  cfg.seed = 8;
  cfg.stop_when = [](const train::LossRow& row) { return row.train_loss < 0.1; };
  const auto result = train::train_loop(cfg, *m, pairs, pairs, hash);
  OverfitRun run;
  run.rows = result.log.rows();
  run.params = m->params().snapshot();
  run.final_loss = run.rows.back().train_loss;
  run.iterations = run.rows.back().iteration;
  return run;
}

Outcome overfit_sanity() {
  const auto start = Clock::now();
  text::Vocabulary vocab = text::Vocabulary::from_counts({}, 9);
  const auto pairs = overfit_corpus(vocab);
  bool pass = true;
  std::string detail;
  for (ModelKind kind : {ModelKind::Baseline, ModelKind::Pointer, ModelKind::PointerCoverage, ModelKind::Transformer}) {
    const OverfitRun a = overfit(kind, pairs, vocab.size(), vocab.hash());
    const OverfitRun b = overfit(kind, pairs, vocab.size(), vocab.hash());
    bool same = a.params == b.params && a.rows.size() == b.rows.size();
    for (std::size_t i = 0; same && i < a.rows.size(); ++i) {
      same = a.rows[i].iteration == b.rows[i].iteration && a.rows[i].train_loss == b.rows[i].train_loss &&
             a.rows[i].valid_loss == b.rows[i].valid_loss;
    }
    pass &= a.final_loss < 0.1 && same;
    detail += fmt("%s %.3f@%zu%s; ", std::string(model::model_name(kind)).c_str(), a.final_loss, a.iterations,
                  same ? "" : " (rerun differs)");
  }
  detail += fmt("reruns bit-identical: %s; %.0f s", pass ? "yes" : "see above", seconds_since(start));
  return {pass, detail};
}

// ---- 8 ---------------------------------------------------------------------------

Outcome checkpoint_roundtrip() {
  const auto pairs = model::toy_pairs();
  const auto path = std::filesystem::temp_directory_path() / "summ_acceptance.ckpt";
  bool pass = true;
  std::string detail;
  for (ModelKind kind : {ModelKind::Baseline, ModelKind::Pointer, ModelKind::PointerCoverage, ModelKind::Transformer}) {
    auto m = model::make_summarizer(model::toy_config(kind, 12), 21);
    train::TrainConfig cfg;
    cfg.batch_size = 2;
    cfg.max_iterations = 5;
    cfg.eval_interval = 5;
    cfg.cov_start_iteration = 2;
    train::AdagradState opt = train::AdagradState::create(m->params());
    train::train_loop(cfg, *m, pairs, {}, 77);
    const auto ckpt = train::make_checkpoint(*m, 77, 5, &opt);
    train::save_checkpoint(ckpt, path);
    const auto loaded = train::instantiate(train::load_checkpoint(path, {kind, 77}));
    bool same = loaded->params().snapshot() == m->params().snapshot() &&
                loaded->coverage_active() == m->coverage_active();
    for (const auto& p : pairs) {
      same &= loaded->loss(p).item() == m->loss(p).item();
      const auto s1 = m->begin(p), s2 = loaded->begin(p);
      auto st1 = s1->initial(), st2 = s2->initial();
      int prev = text::Vocabulary::kStart;
      for (int step = 0; step < 4; ++step) {
        const auto o1 = s1->step(st1, prev), o2 = s2->step(st2, prev);
        same &= o1.log_probs == o2.log_probs && o1.next.attention == o2.next.attention;
        prev = static_cast<int>(std::max_element(o1.log_probs.begin(), o1.log_probs.end()) - o1.log_probs.begin());
        st1 = o1.next;
        st2 = o2.next;
      }
    }
    pass &= same;
    detail += fmt("%s %s; ", std::string(model::model_name(kind)).c_str(), same ? "identical" : "DIFFERS");
  }
  std::filesystem::remove(path);
  return {pass, detail + "probe: losses and 4 decode steps per toy pair"};
}

// ---- 9 ---------------------------------------------------------------------------

Outcome causality() {
  Rng rng(909);
  int violations = 0;
  std::size_t checks = 0;
  for (int trial = 0; trial < 100; ++trial) {
    model::TransformerConfig cfg;
    cfg.heads = 1 + rng.index(4);
    cfg.d_model = cfg.heads * (1 + rng.index(4)) * 2;
    cfg.layers = 1 + rng.index(2);
    cfg.ffn_size = 2 + rng.index(16);
    cfg.vocab_size = 9 + rng.index(10);
    cfg.max_length = 32;
    model::ParamStore store;
    const auto params = model::TransformerParams::create(store, cfg, rng);
    std::vector<int> src(1 + rng.index(8)), tgt(1 + rng.index(8));
    for (int& id : src) id = static_cast<int>(rng.index(cfg.vocab_size));
    for (int& id : tgt) id = static_cast<int>(rng.index(cfg.vocab_size));
    ag::NoGradGuard guard;
    const ag::Tensor memory = model::encoder_forward(src, cfg, params);
    const ag::Tensor base = model::decoder_forward(tgt, memory, cfg, params);
    const std::size_t v = cfg.vocab_size;
    for (std::size_t j = 0; j < tgt.size(); ++j) {
      auto changed = tgt;
      changed[j] = static_cast<int>((static_cast<std::size_t>(changed[j]) + 1 + rng.index(v - 1)) % v);
      const ag::Tensor out = model::decoder_forward(changed, memory, cfg, params);
      ++checks;
      violations += !std::equal(base.data().begin(), base.data().begin() + static_cast<std::ptrdiff_t>(j * v),
                                out.data().begin());
    }
  }
  return {violations == 0, fmt("100 configurations, %zu perturbations, %d violations", checks, violations)};
}

// ---- 10 --------------------------------------------------------------------------

Outcome classifier_pipeline() {
  const auto start = Clock::now();
  const auto records = news::synthetic_news(1000, 1);
  std::size_t fake = 0;
  for (const auto& r : records) fake += r.label;

  news::LeadSummarizerOptions lead;
  const news::BodySummarizer summarizer = news::train_lead_summarizer(records, lead);

  std::vector<news::GridRow> rows;
  std::ofstream confusion("acceptance_confusion.txt");
  bool pass = fake == 500;
  std::string detail;
  for (auto variant : {news::FeatureVariant::Body, news::FeatureVariant::Headline, news::FeatureVariant::Summary}) {
    const auto feats = news::build_features(records, variant, &summarizer);
    const auto [train_set, valid_set] = news::holdout_split(feats, 0.2, 1);
    double best = 0.0;
    std::size_t index = 0;
    for (const auto& cfg : news::grid_configs(news::ClassifierConfig{})) {
      std::vector<news::EpochStats> curve;
      const auto clf = news::train_classifier(train_set, cfg, valid_set, &curve);
      news::GridRow row{std::string(news::variant_name(variant)), ++index, cfg, curve.back(),
                        news::evaluate(clf, valid_set)};
      best = std::max(best, row.valid.accuracy);
      news::write_confusion(confusion, row.variant + " experiment " + std::to_string(index), row.valid.matrix);
      rows.push_back(std::move(row));
    }
    pass &= best >= 0.95;
    detail += fmt("%s best %.1f%%; ", std::string(news::variant_name(variant)).c_str(), 100.0 * best);
  }
  std::ofstream csv("acceptance_classifier.csv");
  news::write_results_csv(csv, rows);

  const auto head = news::build_features(records, news::FeatureVariant::Headline);
  const auto folds = news::fold_assignment(head.size(), 5, 1);
  std::vector<std::size_t> sizes(5, 0);
  for (std::size_t f : folds) ++sizes[f];
  news::ClassifierConfig cfg;
  cfg.hidden_size = 64;
  const auto results = news::kfold(head, 5, cfg);
  std::size_t covered = 0;
  for (const auto& r : results) covered += r.matrix.total();
  const bool exact = covered == head.size() && folds.size() == head.size() &&
                     *std::max_element(sizes.begin(), sizes.end()) == 200 &&
                     *std::min_element(sizes.begin(), sizes.end()) == 200;
  pass &= exact && rows.size() == 24;
  detail += fmt("5-fold covers %zu/%zu once each; %.0f s", covered, head.size(), seconds_since(start));
  return {pass, detail};
}

// ---- 11 --------------------------------------------------------------------------

Outcome adagrad_unit() {
  double theta = 0.0, acc = 0.1;
  const double grad = 2.0;
  train::adagrad_step(std::span<double>(&theta, 1), std::span<const double>(&grad, 1), std::span<double>(&acc, 1),
                      {0.15, 0.1, 1e-10});
  const double closed_form = -0.15 * 2.0 / std::sqrt(4.1);
  return {std::abs(theta - (-0.14818)) <= 1e-5,
          fmt("theta %.7f, accumulator %.2f; target -0.14818 +/- 1e-5, off by %.2e; closed form -0.3/sqrt(4.1) = %.7f",
              theta, acc, std::abs(theta + 0.14818), closed_form)};
}

}  // namespace

// Usage: acceptance [--expect-fail N]... [N]...
// Listed numbers restrict the run. The exit status is zero when the failing
// criteria are exactly the expected ones.
int main(int argc, char** argv) {
  std::set<int> only, expected;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--expect-fail") == 0 && i + 1 < argc) {
      expected.insert(std::atoi(argv[++i]));
    } else {
      only.insert(std::atoi(argv[i]));
    }
  }
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradients},
      {"distribution invariants", distributions},
      {"coverage algebra", coverage},
      {"OOV copy capability", copy_capability},
      {"repetition reduction", repetition},
      {"ROUGE oracle equivalence", rouge_oracle},
      {"overfit sanity", overfit_sanity},
      {"checkpoint round-trip", checkpoint_roundtrip},
      {"decoder causality", causality},
      {"classifier pipeline", classifier_pipeline},
      {"Adagrad unit", adagrad_unit},
  };
  std::set<int> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(number)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) failed.insert(number);
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", number, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  if (!only.empty()) {
    std::erase_if(expected, [&](int n) { return !only.count(n); });
  }
  for (int n : expected) {
    std::printf("%s expected failure %d\n", failed.count(n) ? "note:" : "unexpected pass:", n);
  }
  return failed == expected ? 0 : 1;
}
