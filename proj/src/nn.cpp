#include "relaynet/nn.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <ostream>

namespace relaynet {

namespace {

std::uint64_t next_generation() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("mlp: need at least input and output sizes");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] < 1 || sizes_[l + 1] < 1) throw std::invalid_argument("mlp: layer sizes must be >= 1");
    offsets_.push_back(total);
    total += static_cast<std::size_t>(sizes_[l] * sizes_[l + 1] + sizes_[l + 1]);
  }
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));
  touch();
}

Mlp Mlp::standard(int inputs, int outputs) { return Mlp({inputs, 20, 20, 20, 20, outputs}); }

void Mlp::initialize(Rng& rng) {
  params_.setZero();
  for (int l = 0; l < layer_count(); ++l) {
    const double limit = std::sqrt(6.0 / (sizes_[l] + sizes_[l + 1]));
    std::uniform_real_distribution<double> dist(-limit, limit);
    const auto n = static_cast<std::size_t>(sizes_[l] * sizes_[l + 1]);
    for (std::size_t i = 0; i < n; ++i) params_[static_cast<Eigen::Index>(weight_offset(l) + i)] = dist(rng);
  }
  touch();
}

void Mlp::set_parameters(const Eigen::VectorXd& params) {
  if (params.size() != params_.size()) throw std::invalid_argument("mlp: parameter count mismatch");
  params_ = params;
  touch();
}

Eigen::VectorXd& Mlp::parameters_for_update() {
  touch();
  return params_;
}

void Mlp::touch() { generation_ = next_generation(); }

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(int layer) const {
  return {params_.data() + weight_offset(layer), sizes_[layer + 1], sizes_[layer]};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(int layer) const {
  return {params_.data() + bias_offset(layer), sizes_[layer + 1]};
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& inputs) const {
  if (inputs.rows() != input_size()) throw std::invalid_argument("mlp forward: input size mismatch");
  Eigen::MatrixXd a = inputs;
  for (int l = 0; l < layer_count(); ++l) {
    Eigen::MatrixXd z = weight(l) * a;
    z.colwise() += bias(l);
    if (l + 1 < layer_count()) z = z.array().tanh();
    a = std::move(z);
  }
  return a;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& inputs, Tape& tape) const {
  if (inputs.rows() != input_size()) throw std::invalid_argument("mlp forward: input size mismatch");
  tape.generation = generation_;
  tape.activations.clear();
  tape.activations.reserve(sizes_.size());
  tape.activations.push_back(inputs);
  for (int l = 0; l < layer_count(); ++l) {
    Eigen::MatrixXd z = weight(l) * tape.activations.back();
    z.colwise() += bias(l);
    if (l + 1 < layer_count()) z = z.array().tanh();
    tape.activations.push_back(std::move(z));
  }
  return tape.activations.back();
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& input) const {
  return forward(Eigen::MatrixXd(input)).col(0);
}

Eigen::VectorXd Mlp::backward(const Tape& tape, const Eigen::MatrixXd& upstream,
                              Eigen::MatrixXd* input_gradient) const {
  if (tape.activations.size() != sizes_.size() || tape.generation != generation_) {
    throw std::logic_error("mlp backward: stale or missing forward cache");
  }
  const auto batch = tape.activations.front().cols();
  if (upstream.rows() != output_size() || upstream.cols() != batch) {
    throw std::invalid_argument("mlp backward: upstream gradient shape mismatch");
  }
  Eigen::VectorXd grads = Eigen::VectorXd::Zero(params_.size());
  Eigen::MatrixXd g = upstream;
  for (int l = layer_count() - 1; l >= 0; --l) {
    if (l + 1 < layer_count()) {
      const auto& out = tape.activations[static_cast<std::size_t>(l + 1)];
      g = g.array() * (1.0 - out.array().square());
    }
    const auto& in = tape.activations[static_cast<std::size_t>(l)];
    Eigen::Map<Eigen::MatrixXd> dw(grads.data() + weight_offset(l), sizes_[l + 1], sizes_[l]);
    Eigen::Map<Eigen::VectorXd> db(grads.data() + bias_offset(l), sizes_[l + 1]);
    dw.noalias() = g * in.transpose();
    db = g.rowwise().sum();
    if (l > 0 || input_gradient != nullptr) g = weight(l).transpose() * g;
  }
  if (input_gradient != nullptr) *input_gradient = std::move(g);
  return grads;
}

void save_network(std::ostream& out, const std::string& name, const Mlp& net) {
  out << "network " << name << '\n';
  out << name << " sizes " << net.sizes().size();
  for (int s : net.sizes()) out << ' ' << s;
  out << '\n';
  for (int l = 0; l < net.layer_count(); ++l) {
    const std::string tag = name + " layer" + std::to_string(l);
    out << tag << " weight";
    const auto w = net.weight(l);
    for (Eigen::Index i = 0; i < w.size(); ++i) out << ' ' << format_double(w.data()[i]);
    out << '\n' << tag << " bias";
    const auto b = net.bias(l);
    for (Eigen::Index i = 0; i < b.size(); ++i) out << ' ' << format_double(b[i]);
    out << '\n';
  }
}

Mlp load_network(TextReader& reader, const std::string& name) {
  if (reader.text("network") != name) throw ParseError("expected network section " + name);
  const std::string header_line = reader.raw();
  const auto header = split_whitespace(header_line);
  if (header.size() < 3 || header[0] != name || header[1] != "sizes") throw ParseError("field " + name + ".sizes missing");
  const auto count = static_cast<std::size_t>(parse_integer(header[2], name + ".sizes"));
  if (header.size() != 3 + count || count < 2) throw ParseError("field " + name + ".sizes: wrong length");
  std::vector<int> sizes;
  for (std::size_t i = 0; i < count; ++i) {
    sizes.push_back(static_cast<int>(parse_integer(header[3 + i], name + ".sizes[" + std::to_string(i) + "]")));
  }
  Mlp net(sizes);
  Eigen::VectorXd params(static_cast<Eigen::Index>(net.parameter_count()));
  Eigen::Index at = 0;
  for (int l = 0; l + 1 < static_cast<int>(sizes.size()); ++l) {
    const std::string layer = "layer" + std::to_string(l);
    const auto w = reader.values({name, layer, "weight"}, static_cast<std::size_t>(sizes[l] * sizes[l + 1]));
    const auto b = reader.values({name, layer, "bias"}, static_cast<std::size_t>(sizes[l + 1]));
    for (double v : w) params[at++] = v;
    for (double v : b) params[at++] = v;
  }
  net.set_parameters(params);
  return net;
}

void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads) {
  if (grads.size() != params.size()) throw std::invalid_argument("adam_step: gradient shape mismatch");
  if (!grads.allFinite()) throw std::runtime_error("adam_step: non-finite gradient, aborting training");
  if (state.first_moment.size() == 0) {
    state.first_moment = Eigen::VectorXd::Zero(params.size());
    state.second_moment = Eigen::VectorXd::Zero(params.size());
  }
  if (state.first_moment.size() != params.size()) throw std::invalid_argument("adam_step: optimizer state shape mismatch");
  ++state.step;
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads;
  state.second_moment = state.beta2 * state.second_moment + (1.0 - state.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  params.array() -= state.learning_rate * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + state.epsilon);
}

void adam_step(AdamState& state, Mlp& net, const Eigen::VectorXd& grads) {
  adam_step(state, net.parameters_for_update(), grads);
}

GaussianHead GaussianHead::from_output(const Eigen::Ref<const Eigen::VectorXd>& output) {
  if (output.size() != 4) throw std::invalid_argument("gaussian head: actor output must have 4 entries");
  GaussianHead h;
  for (int d = 0; d < 2; ++d) {
    h.mean[d] = std::tanh(output[d]);
    const double s = std::exp(output[2 + d]);
    h.std_clamped[d] = !(s > kMinPolicyStd && s < kMaxPolicyStd);
    h.std[d] = std::clamp(s, kMinPolicyStd, kMaxPolicyStd);
  }
  return h;
}

double log_prob(const GaussianHead& head, const std::array<double, 2>& sample) {
  constexpr double half_log_two_pi = 0.91893853320467274178;
  double lp = 0.0;
  for (int d = 0; d < 2; ++d) {
    const double z = (sample[d] - head.mean[d]) / head.std[d];
    lp += -0.5 * z * z - std::log(head.std[d]) - half_log_two_pi;
  }
  return lp;
}

Eigen::Vector4d log_prob_gradient(const GaussianHead& head, const std::array<double, 2>& sample) {
  Eigen::Vector4d g;
  for (int d = 0; d < 2; ++d) {
    const double z = (sample[d] - head.mean[d]) / head.std[d];
    g[d] = z / head.std[d] * (1.0 - head.mean[d] * head.mean[d]);
    g[2 + d] = head.std_clamped[d] ? 0.0 : z * z - 1.0;
  }
  return g;
}

std::pair<std::array<double, 2>, double> log_prob_and_sample(const GaussianHead& head, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::array<double, 2> x{};
  for (int d = 0; d < 2; ++d) x[d] = head.mean[d] + head.std[d] * normal(rng);
  return {x, log_prob(head, x)};
}

}  // namespace relaynet
