#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <tuple>
#include <ostream>

#include "summ/classifier.hpp"

namespace summ::news {
namespace {

ag::Tensor bce(const ag::Tensor& logit, int label) {
  const ag::Tensor p = ag::sigmoid(label ? logit : ag::neg(logit));
  return ag::neg(ag::log(ag::clamp_min(p, model::kProbFloor)));
}

void check_classes(std::span<const Example> examples) {
  std::size_t fake = 0;
  for (const Example& e : examples) {
    if (e.label != 0 && e.label != 1) throw std::invalid_argument("labels must be 0 or 1");
    fake += static_cast<std::size_t>(e.label);
  }
  const std::size_t real = examples.size() - fake;
  if (fake < 2 || real < 2) {
    throw std::invalid_argument("training needs at least two examples per class (got " + std::to_string(real) +
                                " real, " + std::to_string(fake) + " fake)");
  }
}

std::string fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string_view cell_name(CellKind c) noexcept { return c == CellKind::Lstm ? "LSTM" : "Bi-LSTM"; }

void ClassifierConfig::validate() const {
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must lie in [0, 1)");
  if (hidden_size == 0 || embedding_dim == 0 || max_length == 0 || epochs == 0 || batch_size == 0) {
    throw std::invalid_argument("classifier sizes must be positive");
  }
  if (max_vocab <= text::Vocabulary::kNumSpecials) throw std::invalid_argument("classifier vocabulary too small");
}

double Confusion::accuracy() const noexcept {
  return total() ? static_cast<double>(tp + tn) / static_cast<double>(total()) : 0.0;
}

Classifier::Classifier(const ClassifierConfig& config, text::Vocabulary vocab)
    : config_(config), vocab_(std::move(vocab)) {
  config_.validate();
  Rng rng(config_.seed);
  const std::size_t E = config_.embedding_dim, h = config_.hidden_size;
  embedding_ = params_.uniform("embedding", {vocab_.size(), E}, rng);
  forward_ = model::LstmCell::create(params_, "lstm.forward", E, h, rng);
  std::size_t features = h;
  if (config_.cell == CellKind::BiLstm) {
    backward_ = model::LstmCell::create(params_, "lstm.backward", E, h, rng);
    features = 2 * h;
  }
  dense_w_ = params_.uniform("dense.weight", {features}, rng);
  dense_b_ = params_.constant("dense.bias", {});
}

ag::Tensor Classifier::logit(std::span<const text::Token> tokens, Rng* dropout_rng) const {
  // Sequences are run unpadded, so the final state is that of the last real token.
  const std::size_t n = std::min(tokens.size(), config_.max_length);
  std::vector<ag::Tensor> inputs;
  inputs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) inputs.push_back(ag::embedding_row(embedding_, vocab_.id(tokens[i])));
  const std::size_t h = config_.hidden_size;
  model::LstmState fw = model::LstmState::zeros(h);
  for (const ag::Tensor& x : inputs) fw = model::lstm_step(forward_, x, fw);
  ag::Tensor feature = fw.h;
  if (config_.cell == CellKind::BiLstm) {
    model::LstmState bw = model::LstmState::zeros(h);
    for (std::size_t i = n; i-- > 0;) bw = model::lstm_step(backward_, inputs[i], bw);
    feature = ag::concat({fw.h, bw.h}, 0);
  }
  if (dropout_rng && config_.dropout > 0.0) {
    std::vector<double> mask(feature.size());
    const double keep = 1.0 - config_.dropout;
    for (double& m : mask) m = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
    feature = ag::mul(feature, ag::Tensor::vector(std::move(mask)));
  }
  return ag::add(ag::sum(ag::mul(dense_w_, feature)), dense_b_);
}

ag::Tensor Classifier::loss(const Example& example, Rng* dropout_rng) const {
  return bce(logit(example.tokens, dropout_rng), example.label);
}

double Classifier::probability(std::span<const text::Token> tokens) const {
  ag::NoGradGuard guard;
  return ag::sigmoid(logit(tokens, nullptr)).item();
}

EvalResult evaluate(const Classifier& classifier, std::span<const Example> examples) {
  ag::NoGradGuard guard;
  EvalResult r;
  double total = 0.0;
  for (const Example& e : examples) {
    const ag::Tensor z = classifier.logit(e.tokens, nullptr);
    total += bce(z, e.label).item();
    const bool predicted_fake = ag::sigmoid(z).item() >= 0.5;
    if (e.label == 1) {
      predicted_fake ? ++r.matrix.tp : ++r.matrix.fn;
    } else {
      predicted_fake ? ++r.matrix.fp : ++r.matrix.tn;
    }
  }
  r.accuracy = r.matrix.accuracy();
  r.loss = examples.empty() ? 0.0 : total / static_cast<double>(examples.size());
  return r;
}

Classifier train_classifier(std::span<const Example> train, const ClassifierConfig& config,
                            std::span<const Example> valid, std::vector<EpochStats>* curve) {
  config.validate();
  check_classes(train);
  // Canonical order first, so results depend on the seed and not on input order.
  std::vector<Example> data(train.begin(), train.end());
  std::sort(data.begin(), data.end(),
            [](const Example& a, const Example& b) { return std::tie(a.tokens, a.label) < std::tie(b.tokens, b.label); });

  std::vector<text::Tokens> corpus;
  corpus.reserve(data.size());
  for (const Example& e : data) corpus.push_back(e.tokens);
  Classifier clf(config, text::Vocabulary::build(corpus, config.max_vocab));

  Rng order_rng(config.seed);
  Rng dropout_rng(order_rng.fork());
  train::AdagradState opt = train::AdagradState::create(clf.params(), config.adagrad);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  clf.params().zero_grad();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const ag::Tensor l = clf.loss(data[order[i]], &dropout_rng);
        if (!std::isfinite(l.item())) {
          throw NumericError("non-finite classifier loss in epoch " + std::to_string(epoch));
        }
        ag::scale(l, inv).backward();
      }
      train::clip_grad_norm(clf.params(), config.clip_norm);
      train::adagrad_step(clf.params(), opt);
      clf.params().zero_grad();
    }
    if (curve) {
      const EvalResult tr = evaluate(clf, data);
      EpochStats s{epoch, tr.loss, tr.accuracy, 0.0, 0.0};
      if (!valid.empty()) {
        const EvalResult va = evaluate(clf, valid);
        s.valid_loss = va.loss;
        s.valid_acc = va.accuracy;
      }
      curve->push_back(s);
    }
  }
  return clf;
}

std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("k-fold needs k >= 2");
  if (k > n) throw std::invalid_argument("k=" + std::to_string(k) + " exceeds " + std::to_string(n) + " records");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx);
  std::vector<std::size_t> fold(n);
  for (std::size_t pos = 0; pos < n; ++pos) fold[idx[pos]] = pos % k;
  return fold;
}

std::vector<EvalResult> kfold(std::span<const Example> examples, std::size_t k, const ClassifierConfig& config) {
  const std::vector<std::size_t> fold = fold_assignment(examples.size(), k, config.seed);
  std::vector<EvalResult> results;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<Example> tr, te;
    for (std::size_t i = 0; i < examples.size(); ++i) (fold[i] == f ? te : tr).push_back(examples[i]);
    results.push_back(evaluate(train_classifier(tr, config), te));
  }
  return results;
}

std::pair<std::vector<Example>, std::vector<Example>> holdout_split(std::span<const Example> examples,
                                                                    double valid_fraction, std::uint64_t seed) {
  if (!(valid_fraction > 0.0 && valid_fraction < 1.0)) throw std::invalid_argument("valid fraction must be in (0,1)");
  std::vector<std::size_t> idx(examples.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx);
  const auto n_valid = static_cast<std::size_t>(std::llround(valid_fraction * static_cast<double>(examples.size())));
  std::pair<std::vector<Example>, std::vector<Example>> out;
  for (std::size_t pos = 0; pos < idx.size(); ++pos) {
    (pos < n_valid ? out.second : out.first).push_back(examples[idx[pos]]);
  }
  return out;
}

std::vector<ClassifierConfig> grid_configs(const ClassifierConfig& base) {
  std::vector<ClassifierConfig> grid;
  for (CellKind cell : {CellKind::Lstm, CellKind::BiLstm}) {
    for (std::size_t size : {64, 128}) {
      for (double dropout : {0.2, 0.5}) {
        ClassifierConfig c = base;
        c.cell = cell;
        c.hidden_size = size;
        c.dropout = dropout;
        grid.push_back(c);
      }
    }
  }
  return grid;
}

void write_results_csv(std::ostream& out, std::span<const GridRow> rows) {
  out << "variant,experiment,cells,size,dropout,train_loss,train_acc,valid_loss,valid_acc\n";
  for (const GridRow& r : rows) {
    out << r.variant << ',' << r.experiment << ',' << cell_name(r.config.cell) << ',' << r.config.hidden_size << ','
        << fixed(r.config.dropout, 1) << ',' << fixed(r.final.train_loss, 4) << ','
        << fixed(100.0 * r.final.train_acc, 2) << ',' << fixed(r.final.valid_loss, 4) << ','
        << fixed(100.0 * r.final.valid_acc, 2) << '\n';
  }
}

void write_confusion(std::ostream& out, const std::string& title, const Confusion& m) {
  char buf[160];
  out << title << '\n';
  std::snprintf(buf, sizeof buf, "%-12s %10s %10s\n", "", "pred real", "pred fake");
  out << buf;
  std::snprintf(buf, sizeof buf, "%-12s %10zu %10zu\n", "actual real", m.tn, m.fp);
  out << buf;
  std::snprintf(buf, sizeof buf, "%-12s %10zu %10zu\n", "actual fake", m.fn, m.tp);
  out << buf;
  out << "accuracy " << fixed(100.0 * m.accuracy(), 2) << "% over " << m.total() << '\n';
}

}  // namespace summ::news
