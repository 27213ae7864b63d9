#include "relaynet/channel.hpp"

#include <cmath>
#include <string>

namespace relaynet {

void NetworkConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("network config: ") + what);
  };
  require(relays >= 1, "relays must be >= 1");
  require(source_antennas >= 1, "source_antennas must be >= 1");
  require(destination_antennas >= 1, "destination_antennas must be >= 1");
  require(path_loss_constant > 0, "path_loss_constant must be > 0");
  require(path_loss_exponent > 0, "path_loss_exponent must be > 0");
  require(noise_power > 0, "noise_power must be > 0");
  require(max_power > 0, "max_power must be > 0");
  require(destination_threshold > 0, "destination_threshold must be > 0");
}

double NetworkConfig::link_variance(double distance) const {
  if (!(distance > 0)) throw std::invalid_argument("link distance must be > 0");
  return path_loss_constant * std::pow(distance, -path_loss_exponent);
}

OutageMode parse_outage_mode(std::string_view name) {
  if (name == "or") return OutageMode::Or;
  if (name == "and") return OutageMode::And;
  throw std::invalid_argument("unknown outage mode '" + std::string(name) + "' (expected or|and)");
}

std::string_view to_string(OutageMode mode) { return mode == OutageMode::Or ? "or" : "and"; }

ChannelVector sample_channel(Rng& rng, double variance, std::size_t length) {
  if (!(variance > 0)) throw std::invalid_argument("sample_channel: variance must be > 0");
  if (length == 0) throw std::invalid_argument("sample_channel: length must be >= 1");
  std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
  ChannelVector h(length);
  for (auto& x : h) {
    const double re = normal(rng);
    const double im = normal(rng);
    x = {re, im};
  }
  return h;
}

double squared_norm(std::span<const std::complex<double>> h) {
  double s = 0.0;
  for (const auto& x : h) s += std::norm(x);
  return s;
}

double mutual_information(double power, double gain, double noise) {
  if (!(noise > 0)) throw std::invalid_argument("mutual_information: noise must be > 0");
  if (power < 0 || gain < 0) throw std::invalid_argument("mutual_information: power and gain must be >= 0");
  return std::log2(1.0 + power * gain / noise);
}

int outage_indicator(double relay_rate, double destination_rate, double relay_threshold,
                     double destination_threshold, OutageMode mode) {
  const bool relay_fails = relay_rate < relay_threshold;
  const bool destination_fails = destination_rate < destination_threshold;
  if (mode == OutageMode::And) return (relay_fails && destination_fails) ? 1 : 0;
  return (relay_fails || destination_fails) ? 1 : 0;
}

double closed_form_outage(double power, double threshold, double sigma2, double noise) {
  if (!(sigma2 > 0) || !(noise > 0)) throw std::invalid_argument("closed_form_outage: sigma2 and noise must be > 0");
  if (threshold <= 0) return 0.0;
  if (power <= 0) return 1.0;
  if (std::isinf(power)) return 0.0;
  const double required_snr = std::exp2(threshold) - 1.0;
  return -std::expm1(-required_snr * noise / (power * sigma2));
}

}  // namespace relaynet
