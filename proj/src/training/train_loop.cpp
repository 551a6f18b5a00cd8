#include <cmath>
#include <limits>
#include <numeric>

#include "summ/training.hpp"

namespace summ::train {

void TrainConfig::validate() const {
  if (batch_size == 0 || max_iterations == 0 || eval_interval == 0) {
    throw std::invalid_argument("batch size, iterations and eval interval must be positive");
  }
  if (cov_start_iteration > max_iterations) {
    throw std::invalid_argument("coverage start " + std::to_string(cov_start_iteration) + " exceeds " +
                                std::to_string(max_iterations) + " iterations");
  }
  if (!(clip_norm > 0.0)) throw std::invalid_argument("clip norm must be positive");
}

std::vector<text::EncodedPair> prepare_pairs(std::span<const text::RawPair> pairs, const text::Vocabulary& vocab,
                                             bool with_markers, std::size_t max_article, std::size_t max_summary) {
  std::vector<text::EncodedPair> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    text::Tokens article = text::prepare(pairs[i].article, with_markers);
    text::Tokens summary = text::prepare(pairs[i].summary, with_markers);
    if (article.size() > max_article) article.resize(max_article);
    if (summary.size() > max_summary) summary.resize(max_summary);
    if (article.empty()) throw std::invalid_argument("pair " + std::to_string(i) + " has an empty article");
    out.push_back(text::encode_pair(article, summary, vocab));
  }
  return out;
}

double evaluate_loss(const model::Summarizer& model, std::span<const text::EncodedPair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("evaluate_loss over zero pairs");
  ag::NoGradGuard guard;
  double total = 0.0;
  for (const auto& p : pairs) total += model.loss(p).item();
  return total / static_cast<double>(pairs.size());
}

TrainResult train_loop(const TrainConfig& config, model::Summarizer& model, std::span<const text::EncodedPair> train,
                       std::span<const text::EncodedPair> dev, std::uint64_t vocab_hash) {
  config.validate();
  if (train.empty()) throw std::invalid_argument("training corpus is empty");
  const std::span<const text::EncodedPair> valid = dev.empty() ? train : dev;

  Rng rng(config.seed);
  AdagradState opt = AdagradState::create(model.params(), config.adagrad);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  TrainResult result;
  result.best_valid_loss = std::numeric_limits<double>::infinity();
  double interval_sum = 0.0;
  std::size_t interval_batches = 0;
  model.params().zero_grad();

  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    model.set_coverage_active(it >= config.cov_start_iteration);
    const double inv_batch = 1.0 / static_cast<double>(config.batch_size);
    double batch_loss = 0.0;
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      if (cursor == order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      const ag::Tensor loss = model.loss(train[order[cursor++]]);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw NumericError("non-finite training loss at iteration " + std::to_string(it + 1));
      }
      batch_loss += value * inv_batch;
      ag::scale(loss, inv_batch).backward();
    }
    clip_grad_norm(model.params(), config.clip_norm);
    adagrad_step(model.params(), opt);
    model.params().zero_grad();
    interval_sum += batch_loss;
    ++interval_batches;

    const std::size_t done = it + 1;
    if (done % config.eval_interval == 0 || done == config.max_iterations) {
      LossRow row{done, interval_sum / static_cast<double>(interval_batches), evaluate_loss(model, valid)};
      if (!std::isfinite(row.valid_loss)) {
        throw NumericError("non-finite validation loss at iteration " + std::to_string(done));
      }
      result.log.add(row);
      if (config.on_eval) config.on_eval(row);
      if (row.valid_loss < result.best_valid_loss) {
        result.best_valid_loss = row.valid_loss;
        result.best_iteration = done;
        result.best = make_checkpoint(model, vocab_hash, done, &opt);
      }
      interval_sum = 0.0;
      interval_batches = 0;
      if (config.stop_when && config.stop_when(row)) break;
    }
  }
  return result;
}

}  // namespace summ::train
