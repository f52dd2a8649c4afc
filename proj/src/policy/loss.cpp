#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "navscale/policy.hpp"

namespace navscale::policy {

double loss_scale(const curation::ActionChunk& target, double s_min, double s_max) {
  double w = 0.0;
  for (const auto& a : target) w = std::max(w, std::abs(a.omega));
  return s_min + (s_max - s_min) * std::min(w, 1.0);
}

double loss_scaled(const curation::ActionChunk& pred, const curation::ActionChunk& target, double s_min,
                   double s_max) {
  double sq = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double dv = pred[k].v - target[k].v;
    const double dw = pred[k].omega - target[k].omega;
    sq += dv * dv + dw * dw;
  }
  const double l2 = sq / static_cast<double>(2 * pred.size());
  return l2 * loss_scale(target, s_min, s_max);
}

Batch make_batch(std::span<const PolicySample> samples, const PolicyShape& shape, double s_min, double s_max) {
  if (samples.empty()) throw std::invalid_argument("make_batch: empty batch");
  if (shape.horizon != curation::kChunkLength) throw std::invalid_argument("make_batch: horizon must equal the chunk length");
  const auto n = static_cast<Eigen::Index>(samples.size());
  Batch b{Eigen::MatrixXd(static_cast<Eigen::Index>(shape.input_dim()), n),
          Eigen::MatrixXd(static_cast<Eigen::Index>(shape.output_dim()), n), Eigen::VectorXd(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& s = samples[static_cast<std::size_t>(j)];
    const std::vector<double> x = encode_inputs(s.ranges, s.goals, shape);
    b.inputs.col(j) = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    for (std::size_t k = 0; k < s.target.size(); ++k) {
      b.targets(static_cast<Eigen::Index>(2 * k), j) = s.target[k].v;
      b.targets(static_cast<Eigen::Index>(2 * k + 1), j) = s.target[k].omega;
    }
    b.scales(j) = loss_scale(s.target, s_min, s_max);
  }
  return b;
}

double loss_and_gradients(const MlpPolicy& policy, const Batch& batch, std::vector<DenseLayer>* grads) {
  const auto& layers = policy.layers();
  const Eigen::Index n = batch.inputs.cols();
  if (n == 0) throw std::invalid_argument("loss_and_gradients: empty batch");
  if (batch.targets.cols() != n || batch.scales.size() != n) throw std::invalid_argument("batch columns disagree");
  if (batch.inputs.rows() != static_cast<Eigen::Index>(policy.shape().input_dim()) ||
      batch.targets.rows() != static_cast<Eigen::Index>(policy.shape().output_dim())) {
    throw std::invalid_argument("batch dimensions do not match the policy");
  }

  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(layers.size() + 1);
  acts.push_back(batch.inputs);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Eigen::MatrixXd z = layers[i].weight * acts.back();
    z.colwise() += layers[i].bias;
    if (i + 1 < layers.size()) z = z.array().tanh();
    acts.push_back(std::move(z));
  }

  const Eigen::MatrixXd diff = acts.back() - batch.targets;
  const double m = static_cast<double>(batch.targets.rows());
  const Eigen::RowVectorXd per_sample = diff.array().square().colwise().sum() / m;
  const double loss = per_sample.dot(batch.scales.transpose()) / static_cast<double>(n);
  if (grads == nullptr) return loss;

  grads->resize(layers.size());
  // d loss / d output; the scale depends only on the target.
  Eigen::MatrixXd delta = diff * (2.0 / (m * static_cast<double>(n)));
  delta = delta.array().rowwise() * batch.scales.transpose().array();
  for (std::size_t i = layers.size(); i-- > 0;) {
    (*grads)[i].weight = delta * acts[i].transpose();
    (*grads)[i].bias = delta.rowwise().sum();
    if (i > 0) {
      Eigen::MatrixXd back = layers[i].weight.transpose() * delta;
      delta = back.array() * (1.0 - acts[i].array().square());
    }
  }
  return loss;
}

}  // namespace navscale::policy
