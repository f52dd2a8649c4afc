#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "navscale/policy.hpp"

namespace navscale::policy {

void TrainConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be at least 1");
  if (epochs == 0) throw std::invalid_argument("epochs must be at least 1");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be non-negative");
  if (mirror_prob < 0.0 || mirror_prob > 1.0) throw std::invalid_argument("mirror_prob must lie in [0, 1]");
  if (!(s_min >= 0.0 && s_max >= s_min)) throw std::invalid_argument("need s_max >= s_min >= 0");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) throw std::invalid_argument("betas must lie in [0, 1)");
}

double cosine_lr(double lr0, std::size_t step, std::size_t total_steps) {
  if (total_steps <= 1) return lr0;
  const double f = static_cast<double>(std::min(step, total_steps - 1)) / static_cast<double>(total_steps - 1);
  return 0.5 * lr0 * (1.0 + std::cos(std::numbers::pi * f));
}

TrainResult train(std::span<const PolicySample> dataset, const PolicyShape& shape, const TrainConfig& config) {
  return train(dataset, MlpPolicy::xavier(shape, config.seed), config);
}

TrainResult train(std::span<const PolicySample> dataset, MlpPolicy init, const TrainConfig& config) {
  config.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");

  TrainResult result{std::move(init), {}};
  MlpPolicy& policy = result.policy;
  const PolicyShape& shape = policy.shape();
  auto& layers = policy.layers();

  std::vector<DenseLayer> m1(layers.size());
  std::vector<DenseLayer> m2(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    m1[i] = {Eigen::MatrixXd::Zero(layers[i].weight.rows(), layers[i].weight.cols()),
             Eigen::VectorXd::Zero(layers[i].bias.size())};
    m2[i] = m1[i];
  }

  const std::size_t n = dataset.size();
  const std::size_t per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const std::size_t total = per_epoch * config.epochs;
  result.curve.reserve(total);

  // Independent of the initialization stream so a warm start shuffles alike.
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<std::size_t> order(n);
  std::vector<bool> flip(n);
  std::vector<PolicySample> batch_samples;
  std::vector<DenseLayer> grads;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < n; ++i) flip[i] = coin(rng) < config.mirror_prob;

    for (std::size_t start = 0; start < n; start += config.batch_size, ++step) {
      const std::size_t end = std::min(n, start + config.batch_size);
      batch_samples.clear();
      for (std::size_t i = start; i < end; ++i) {
        const PolicySample& s = dataset[order[i]];
        batch_samples.push_back(flip[i] ? mirror_augment(s) : s);
      }
      const Batch batch = make_batch(batch_samples, shape, config.s_min, config.s_max);
      const double loss = loss_and_gradients(policy, batch, &grads);
      const double lr = cosine_lr(config.lr, step, total);
      if (!std::isfinite(loss)) {
        throw TrainingDivergedError(fmt::format("training diverged at step {}", step), step);
      }
      result.curve.push_back({step, lr, loss});

      const double t = static_cast<double>(step + 1);
      const double c1 = 1.0 - std::pow(config.beta1, t);
      const double c2 = 1.0 - std::pow(config.beta2, t);
      const auto update = [&](auto& w, auto& mom, auto& var, const auto& g) {
        mom = config.beta1 * mom + (1.0 - config.beta1) * g;
        var = config.beta2 * var + (1.0 - config.beta2) * g.cwiseProduct(g);
        w *= 1.0 - lr * config.weight_decay;
        w.array() -= lr * (mom.array() / c1) / ((var.array() / c2).sqrt() + config.adam_eps);
      };
      for (std::size_t l = 0; l < layers.size(); ++l) {
        update(layers[l].weight, m1[l].weight, m2[l].weight, grads[l].weight);
        update(layers[l].bias, m1[l].bias, m2[l].bias, grads[l].bias);
      }
    }
  }
  if (!policy.finite()) throw TrainingDivergedError("training produced non-finite weights", step);
  return result;
}

void write_loss_csv(std::ostream& out, std::span<const LossRecord> curve) {
  out << "step,lr,loss\n";
  for (const auto& r : curve) out << fmt::format("{},{:.17g},{:.17g}\n", r.step, r.lr, r.loss);
}

}  // namespace navscale::policy
