#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "navscale/policy.hpp"

namespace navscale::policy {

std::size_t history_length(Variant v) { return v == Variant::kMlpBc ? 1 : 6; }

std::string to_string(Variant v) { return v == Variant::kMlpBc ? "mlp-bc" : "hist-bc"; }

Variant variant_from_string(const std::string& name) {
  if (name == "mlp-bc" || name == "MLP-BC") return Variant::kMlpBc;
  if (name == "hist-bc" || name == "HIST-BC") return Variant::kHistBc;
  throw std::invalid_argument(fmt::format("unknown policy variant '{}'", name));
}

MlpPolicy::MlpPolicy(PolicyShape shape) : shape_(std::move(shape)) {
  if (shape_.history == 0 || shape_.rays == 0 || shape_.horizon == 0) {
    throw std::invalid_argument("policy shape dimensions must be positive");
  }
  std::size_t in = shape_.input_dim();
  auto add = [&](std::size_t out) {
    if (out == 0) throw std::invalid_argument("hidden layer width must be positive");
    layers_.push_back({Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)),
                       Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out))});
    in = out;
  };
  for (std::size_t h : shape_.hidden) add(h);
  add(shape_.output_dim());
}

MlpPolicy MlpPolicy::xavier(PolicyShape shape, std::uint64_t seed) {
  MlpPolicy p(std::move(shape));
  std::mt19937_64 rng(seed);
  for (auto& layer : p.layers_) {
    const double fan = static_cast<double>(layer.weight.rows() + layer.weight.cols());
    std::uniform_real_distribution<double> u(-std::sqrt(6.0 / fan), std::sqrt(6.0 / fan));
    // Row-major fill so the draw order does not depend on the storage layout.
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = u(rng);
    }
  }
  return p;
}

std::size_t MlpPolicy::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

bool MlpPolicy::finite() const {
  return std::all_of(layers_.begin(), layers_.end(),
                     [](const DenseLayer& l) { return l.weight.allFinite() && l.bias.allFinite(); });
}

Eigen::MatrixXd MlpPolicy::forward_batch(const Eigen::MatrixXd& inputs) const {
  if (static_cast<std::size_t>(inputs.rows()) != shape_.input_dim()) {
    throw std::invalid_argument(
        fmt::format("policy input has {} rows, expected {}", inputs.rows(), shape_.input_dim()));
  }
  Eigen::MatrixXd a = inputs;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Eigen::MatrixXd z = layers_[i].weight * a;
    z.colwise() += layers_[i].bias;
    a = i + 1 < layers_.size() ? Eigen::MatrixXd(z.array().tanh()) : std::move(z);
  }
  return a;
}

curation::ActionChunk MlpPolicy::forward(std::span<const double> input) const {
  if (shape_.horizon != curation::kChunkLength) throw std::invalid_argument("forward: horizon must equal the chunk length");
  const Eigen::Map<const Eigen::VectorXd> x(input.data(), static_cast<Eigen::Index>(input.size()));
  const Eigen::MatrixXd y = forward_batch(x);
  curation::ActionChunk chunk{};
  for (std::size_t k = 0; k < chunk.size(); ++k) {
    chunk[k] = {y(static_cast<Eigen::Index>(2 * k), 0), y(static_cast<Eigen::Index>(2 * k + 1), 0)};
  }
  return chunk;
}

std::vector<double> encode_inputs(std::span<const std::vector<double>> obs_history,
                                  std::span<const curation::GoalVector> goal_history, const PolicyShape& shape) {
  if (obs_history.size() != shape.history || goal_history.size() != shape.history) {
    throw std::invalid_argument(fmt::format("history length {}/{} does not match P = {}", obs_history.size(),
                                            goal_history.size(), shape.history));
  }
  std::vector<double> x;
  x.reserve(shape.input_dim());
  for (std::size_t i = 0; i < shape.history; ++i) {
    if (obs_history[i].size() != shape.rays) {
      throw std::invalid_argument(fmt::format("range fan has {} rays, expected {}", obs_history[i].size(), shape.rays));
    }
    x.insert(x.end(), obs_history[i].begin(), obs_history[i].end());
    x.push_back(goal_history[i].d);
    x.push_back(goal_history[i].theta);
  }
  return x;
}

PolicySample mirror_augment(const PolicySample& s) {
  PolicySample m = s;
  for (auto& r : m.ranges) std::reverse(r.begin(), r.end());
  for (auto& g : m.goals) g.theta = -g.theta;
  for (auto& a : m.target) a.omega = -a.omega;
  return m;
}

}  // namespace navscale::policy
