#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "navscale/curation.hpp"

namespace navscale::policy {

enum class Variant { kMlpBc, kHistBc };

/// History length used by each variant (1 and 6 frames).
std::size_t history_length(Variant v);
std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

struct PolicyShape {
  std::size_t history{1};
  std::size_t rays{64};
  std::size_t horizon{curation::kChunkLength};
  std::vector<std::size_t> hidden{256, 256, 128};

  [[nodiscard]] std::size_t input_dim() const { return history * (rays + 2); }
  [[nodiscard]] std::size_t output_dim() const { return horizon * 2; }

  friend bool operator==(const PolicyShape&, const PolicyShape&) = default;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

/// Fully connected network: tanh on hidden layers, identity output. The
/// output holds the normalized chunk as (v_0, w_0, v_1, w_1, ...).
class MlpPolicy {
 public:
  /// All weights zero.
  explicit MlpPolicy(PolicyShape shape = {});
  /// Xavier-uniform weights, zero biases.
  static MlpPolicy xavier(PolicyShape shape, std::uint64_t seed);

  [[nodiscard]] const PolicyShape& shape() const { return shape_; }
  [[nodiscard]] const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  [[nodiscard]] std::size_t parameter_count() const;
  [[nodiscard]] bool finite() const;

  /// One input per column. Throws std::invalid_argument on a dimension mismatch.
  [[nodiscard]] Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;
  [[nodiscard]] curation::ActionChunk forward(std::span<const double> input) const;

 private:
  PolicyShape shape_;
  std::vector<DenseLayer> layers_;
};

/// [ranges_1 | d_1 theta_1 | ... | ranges_P | d_P theta_P], oldest first.
std::vector<double> encode_inputs(std::span<const std::vector<double>> obs_history,
                                  std::span<const curation::GoalVector> goal_history, const PolicyShape& shape);

/// Rendered training example; ranges are normalized, the target chunk too.
struct PolicySample {
  std::vector<std::vector<double>> ranges;  // oldest first
  std::vector<curation::GoalVector> goals;  // oldest first
  curation::ActionChunk target{};

  friend bool operator==(const PolicySample&, const PolicySample&) = default;
};

/// Reverses every range fan, negates goal bearings and target angular rates.
PolicySample mirror_augment(const PolicySample& s);

/// s_min + (s_max - s_min) * max_k |omega_k| of the target chunk.
double loss_scale(const curation::ActionChunk& target, double s_min, double s_max);
/// Mean squared error over all chunk components times loss_scale.
double loss_scaled(const curation::ActionChunk& pred, const curation::ActionChunk& target, double s_min,
                   double s_max);

struct Batch {
  Eigen::MatrixXd inputs;   // input_dim x B
  Eigen::MatrixXd targets;  // output_dim x B
  Eigen::VectorXd scales;   // B
};

Batch make_batch(std::span<const PolicySample> samples, const PolicyShape& shape, double s_min, double s_max);

/// Mean scaled loss over the batch; fills `grads` (one entry per layer) when
/// non-null.
double loss_and_gradients(const MlpPolicy& policy, const Batch& batch, std::vector<DenseLayer>* grads);

struct TrainConfig {
  std::size_t batch_size{256};
  double lr{1e-4};
  double weight_decay{0.01};
  double beta1{0.9};
  double beta2{0.999};
  double adam_eps{1e-8};
  std::size_t epochs{2};
  double mirror_prob{0.5};
  double s_min{1.0};
  double s_max{10.0};
  std::uint64_t seed{0};

  void validate() const;
};

/// lr0 * (1 + cos(pi * step / (total - 1))) / 2, reaching 0 at the last step.
double cosine_lr(double lr0, std::size_t step, std::size_t total_steps);

struct LossRecord {
  std::size_t step{0};
  double lr{0.0};
  double loss{0.0};
};

struct TrainResult {
  MlpPolicy policy;
  std::vector<LossRecord> curve;
};

class TrainingDivergedError : public std::runtime_error {
 public:
  TrainingDivergedError(const std::string& what, std::size_t step) : std::runtime_error(what), step_(step) {}
  [[nodiscard]] std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// AdamW with a cosine schedule; per-epoch seeded shuffle and mirroring.
TrainResult train(std::span<const PolicySample> dataset, const PolicyShape& shape, const TrainConfig& config);
/// Continues from `init` instead of a fresh Xavier initialization.
TrainResult train(std::span<const PolicySample> dataset, MlpPolicy init, const TrainConfig& config);

void write_loss_csv(std::ostream& out, std::span<const LossRecord> curve);

/// Binary container: "NVSCPOL1", format version, shape, metadata string and
/// row-major little-endian float64 weights.
void save_checkpoint(std::ostream& out, const MlpPolicy& policy, const std::string& metadata = {});
MlpPolicy load_checkpoint(std::istream& in, std::string* metadata = nullptr);
void save_checkpoint_file(const std::string& path, const MlpPolicy& policy, const std::string& metadata = {});
MlpPolicy load_checkpoint_file(const std::string& path, std::string* metadata = nullptr);

}  // namespace navscale::policy
