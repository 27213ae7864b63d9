#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "relaynet/common.hpp"

namespace relaynet {

class Mlp;

/// Activations cached by a forward pass, consumed by backward. Tied to the
/// parameter generation of the network that produced it.
struct Tape {
  std::uint64_t generation = 0;
  std::vector<Eigen::MatrixXd> activations;  // input, every hidden layer, output
};

/// Dense network with Tanh hidden layers and an identity output layer.
/// Parameters live in one flat vector: for each layer the weight matrix
/// (out x in, column-major) followed by the bias.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> sizes);

  /// input -> 4 hidden layers of 20 Tanh units -> output.
  static Mlp standard(int inputs, int outputs);

  /// Uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  void initialize(Rng& rng);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  int layer_count() const { return static_cast<int>(sizes_.size()) - 1; }
  std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }

  const Eigen::VectorXd& parameters() const { return params_; }
  void set_parameters(const Eigen::VectorXd& params);
  /// Mutable access for optimizers; invalidates outstanding tapes.
  Eigen::VectorXd& parameters_for_update();
  std::uint64_t generation() const { return generation_; }

  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

  /// Columns of `inputs` are samples.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs, Tape& tape) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;

  /// Gradient of sum_b <upstream_b, output_b> with respect to every
  /// parameter. Optionally also returns the gradient with respect to the
  /// inputs.
  Eigen::VectorXd backward(const Tape& tape, const Eigen::MatrixXd& upstream,
                           Eigen::MatrixXd* input_gradient = nullptr) const;

  friend bool operator==(const Mlp& a, const Mlp& b) { return a.sizes_ == b.sizes_ && a.params_ == b.params_; }

 private:
  std::size_t weight_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }
  std::size_t bias_offset(int layer) const {
    return offsets_[static_cast<std::size_t>(layer)] +
           static_cast<std::size_t>(sizes_[layer] * sizes_[layer + 1]);
  }
  void touch();

  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  Eigen::VectorXd params_;
  std::uint64_t generation_ = 0;
};

void save_network(std::ostream& out, const std::string& name, const Mlp& net);
Mlp load_network(TextReader& reader, const std::string& name);

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;

  explicit AdamState(double lr = 1e-3) : learning_rate(lr) {}
};

/// One bias-corrected Adam descent step. Throws on non-finite gradients.
void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads);
void adam_step(AdamState& state, Mlp& net, const Eigen::VectorXd& grads);

inline constexpr double kMinPolicyStd = 1e-3;
/// Upper bound in normalized action units (the action box has width 2).
inline constexpr double kMaxPolicyStd = 1.0;

/// Actor output [m0, m1, log_std0, log_std1] viewed as two independent
/// normal distributions with mean tanh(m) and std = exp(log_std) clamped
/// into [kMinPolicyStd, kMaxPolicyStd]. Both bounds keep samples inside or
/// near the normalized action box.
struct GaussianHead {
  std::array<double, 2> mean{};
  std::array<double, 2> std{};
  std::array<bool, 2> std_clamped{};  // log-std gradient is zero when set

  static GaussianHead from_output(const Eigen::Ref<const Eigen::VectorXd>& output);
};

double log_prob(const GaussianHead& head, const std::array<double, 2>& sample);

/// d log_prob / d (raw actor output), 4 entries matching the output layout.
Eigen::Vector4d log_prob_gradient(const GaussianHead& head, const std::array<double, 2>& sample);

/// Samples each dimension independently and returns the joint log-density.
std::pair<std::array<double, 2>, double> log_prob_and_sample(const GaussianHead& head, Rng& rng);

}  // namespace relaynet
