#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "relaynet/channel.hpp"

namespace relaynet {

/// Candidate positions of one relay: L locations (each fixing both hop
/// distances) and J decode thresholds.
struct RelayCandidates {
  std::vector<double> source_distance;       // meters, one per location
  std::vector<double> destination_distance;  // meters, one per location
  std::vector<double> thresholds;            // bits/s/Hz
};

/// Node layout used to generate candidate sets: source at the origin,
/// destination at (destination_distance, 0), relay candidates jittered in a
/// box between them. Location l of every relay is drawn from the l-th of L
/// equal x-strata, so index order follows the source-to-destination axis.
struct Geometry {
  double destination_distance = 100.0;
  int locations = 5;
  double x_min = 0.15;         // fraction of destination_distance
  double x_max = 0.85;
  double y_half_width = 0.25;  // fraction of destination_distance
  std::uint64_t seed = 7;
};

std::vector<RelayCandidates> generate_candidates(const Geometry& geometry, int relays,
                                                 const std::vector<double>& thresholds);

struct MarkovBuildOptions {
  int states = 8;
  double correlation = 0.9;
  std::size_t sample_budget = 100000;
  std::uint64_t seed = 11;
};

/// Finite-state model of every link. Link 2k is source -> relay k, link 2k+1
/// is relay k -> destination. Bin edges and representative gains are shared
/// by all locations of a link; transitions and occupancy are per location.
class MarkovChannelModel {
 public:
  struct Link {
    std::vector<double> edges;            // states + 1, strictly increasing
    std::vector<double> representatives;  // states
    std::vector<std::vector<double>> transitions;  // per location, row-major states x states
    std::vector<std::vector<double>> occupancy;    // per location, states

    friend bool operator==(const Link&, const Link&) = default;
  };

  MarkovChannelModel() = default;
  MarkovChannelModel(int states, std::vector<Link> links);

  int states() const { return states_; }
  int link_count() const { return static_cast<int>(links_.size()); }
  int locations() const;
  const Link& link(int index) const { return links_.at(index); }

  std::span<const double> row(int link, int location, int state) const;
  std::span<const double> occupancy(int link, int location) const;
  double representative(int link, int state) const;

  /// Bin index of a squared channel norm. Every non-negative gain maps to
  /// exactly one bin.
  int quantize(int link, double gain) const;

  void validate() const;

  void save(std::ostream& out) const;
  static MarkovChannelModel load(std::istream& in);

  friend bool operator==(const MarkovChannelModel&, const MarkovChannelModel&) = default;

 private:
  int states_ = 0;
  std::vector<Link> links_;
};

/// Simulates a first-order Gauss-Markov process h(t) = rho h(t-1) +
/// sqrt(1-rho^2) w(t) per (link, location), quantizes the squared norm into
/// equal-probability bins and estimates transition matrices empirically.
MarkovChannelModel build_markov_model(const NetworkConfig& config,
                                      const std::vector<RelayCandidates>& candidates,
                                      const MarkovBuildOptions& options);

}  // namespace relaynet
