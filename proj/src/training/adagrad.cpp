#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "summ/training.hpp"

namespace summ::train {

AdagradState AdagradState::create(const model::ParamStore& params, AdagradConfig config) {
  AdagradState s{config, {}};
  s.accumulators.reserve(params.entries().size());
  for (const auto& p : params.entries()) s.accumulators.emplace_back(p.tensor.size(), config.initial_accumulator);
  return s;
}

void adagrad_step(std::span<double> theta, std::span<const double> grad, std::span<double> acc,
                  const AdagradConfig& config) {
  if (theta.size() != grad.size() || theta.size() != acc.size()) {
    throw ShapeError("adagrad_step: " + std::to_string(theta.size()) + " parameters, " +
                     std::to_string(grad.size()) + " gradients, " + std::to_string(acc.size()) + " accumulators");
  }
  for (std::size_t i = 0; i < theta.size(); ++i) {
    acc[i] += grad[i] * grad[i];
    theta[i] -= config.learning_rate * grad[i] / (std::sqrt(acc[i]) + config.epsilon);
  }
}

void adagrad_step(model::ParamStore& params, AdagradState& state) {
  const auto& entries = params.entries();
  if (entries.size() != state.accumulators.size()) {
    throw ShapeError("optimizer holds " + std::to_string(state.accumulators.size()) + " accumulators for " +
                     std::to_string(entries.size()) + " parameters");
  }
  for (std::size_t k = 0; k < entries.size(); ++k) {
    ag::Tensor t = entries[k].tensor;
    adagrad_step(t.mutable_data(), t.grad(), state.accumulators[k], state.config);
  }
}

double clip_grad_norm(model::ParamStore& params, double max_norm) {
  const double norm = params.grad_norm();
  if (norm > max_norm && norm > 0.0) params.scale_grads(max_norm / norm);
  return norm;
}

void LossLog::add(const LossRow& row) {
  if (!rows_.empty() && row.iteration <= rows_.back().iteration) {
    throw std::invalid_argument("loss log iteration " + std::to_string(row.iteration) + " does not follow " +
                                std::to_string(rows_.back().iteration));
  }
  rows_.push_back(row);
}

void LossLog::write_csv(std::ostream& out) const {
  out << "iteration,train_loss,valid_loss\n";
  char buf[96];
  for (const LossRow& r : rows_) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g\n", r.iteration, r.train_loss, r.valid_loss);
    out << buf;
  }
}

void LossLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv(out);
}

}  // namespace summ::train
