#pragma once

#include <complex>
#include <span>
#include <vector>

#include "relaynet/common.hpp"

namespace relaynet {

/// Static physical constants of the two-hop relay network. The relay power is
/// never stored: it is always max_power minus the source power.
struct NetworkConfig {
  int relays = 3;
  int source_antennas = 2;
  int destination_antennas = 2;
  double path_loss_constant = 1.0;
  double path_loss_exponent = 3.0;
  double noise_power = 1e-7;  // watts
  double max_power = 0.1;     // watts, source + relay
  double destination_threshold = 1.0;  // bits/s/Hz

  void validate() const;

  /// Per-element channel variance h0 * d^-alpha.
  double link_variance(double distance) const;
};

/// How the two hop rates combine into an outage event.
enum class OutageMode {
  Or,   // relay fails to decode OR destination fails (DF outage)
  And,  // both hops below threshold
};

OutageMode parse_outage_mode(std::string_view name);
std::string_view to_string(OutageMode mode);

using ChannelVector = std::vector<std::complex<double>>;

/// Draws `length` i.i.d. zero-mean circular complex Gaussian entries with
/// per-element variance `variance` (variance/2 on each real component).
ChannelVector sample_channel(Rng& rng, double variance, std::size_t length);

double squared_norm(std::span<const std::complex<double>> h);

/// log2(1 + power * gain / noise).
double mutual_information(double power, double gain, double noise);

/// 1 when the hop rates constitute an outage under `mode`, else 0.
int outage_indicator(double relay_rate, double destination_rate, double relay_threshold,
                     double destination_threshold, OutageMode mode);

/// Exact outage probability of a single-antenna Rayleigh link whose gain is
/// exponential with mean sigma2.
double closed_form_outage(double power, double threshold, double sigma2, double noise);

}  // namespace relaynet
