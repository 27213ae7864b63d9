#include "relaynet/markov.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

namespace relaynet {

namespace {

constexpr const char* kModelMagic = "relaynet-markov-model";
constexpr int kModelVersion = 1;

// Gauss-Markov trajectory of squared norms for one (link, location).
std::vector<double> simulate_gains(Rng& rng, double variance, int antennas, double rho,
                                   std::size_t count) {
  std::vector<double> gains(count);
  ChannelVector h = sample_channel(rng, variance, static_cast<std::size_t>(antennas));
  const double innovation = std::sqrt(1.0 - rho * rho);
  std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
  for (std::size_t t = 0; t < count; ++t) {
    if (t > 0) {
      for (auto& x : h) {
        const double re = normal(rng);
        const double im = normal(rng);
        x = rho * x + innovation * std::complex<double>(re, im);
      }
    }
    gains[t] = squared_norm(h);
  }
  return gains;
}

void write_row(std::ostream& out, std::string_view label, std::span<const double> values) {
  out << label;
  for (double v : values) out << ' ' << format_double(v);
  out << '\n';
}


}  // namespace

std::vector<RelayCandidates> generate_candidates(const Geometry& geometry, int relays,
                                                 const std::vector<double>& thresholds) {
  if (relays < 1) throw std::invalid_argument("generate_candidates: relays must be >= 1");
  if (geometry.locations < 1) throw std::invalid_argument("generate_candidates: locations must be >= 1");
  if (!(geometry.destination_distance > 0) || !(geometry.x_min < geometry.x_max) || geometry.y_half_width < 0) {
    throw std::invalid_argument("generate_candidates: malformed geometry box");
  }
  if (thresholds.empty()) throw std::invalid_argument("generate_candidates: need at least one relay threshold");
  for (double t : thresholds) {
    if (!(t > 0)) throw std::invalid_argument("generate_candidates: relay thresholds must be > 0");
  }
  const double dist = geometry.destination_distance;
  Rng rng(geometry.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<RelayCandidates> out(static_cast<std::size_t>(relays));
  for (auto& relay : out) {
    for (int l = 0; l < geometry.locations; ++l) {
      const double frac = geometry.x_min + (geometry.x_max - geometry.x_min) * (l + unit(rng)) / geometry.locations;
      const double x = frac * dist;
      const double y = (2.0 * unit(rng) - 1.0) * geometry.y_half_width * dist;
      relay.source_distance.push_back(std::hypot(x, y));
      relay.destination_distance.push_back(std::hypot(dist - x, y));
    }
    relay.thresholds = thresholds;
  }
  return out;
}

MarkovChannelModel::MarkovChannelModel(int states, std::vector<Link> links)
    : states_(states), links_(std::move(links)) {
  validate();
}

int MarkovChannelModel::locations() const {
  return links_.empty() ? 0 : static_cast<int>(links_.front().transitions.size());
}

std::span<const double> MarkovChannelModel::row(int link, int location, int state) const {
  const auto& t = links_.at(link).transitions.at(location);
  return std::span<const double>(t).subspan(static_cast<std::size_t>(state) * states_, states_);
}

std::span<const double> MarkovChannelModel::occupancy(int link, int location) const {
  return links_.at(link).occupancy.at(location);
}

double MarkovChannelModel::representative(int link, int state) const {
  return links_.at(link).representatives.at(state);
}

int MarkovChannelModel::quantize(int link, double gain) const {
  if (!(gain >= 0)) throw std::invalid_argument("quantize: gain must be >= 0");
  const auto& e = links_.at(link).edges;
  // interior edges only; the outer ones are 0 and +inf
  auto it = std::upper_bound(e.begin() + 1, e.end() - 1, gain);
  return static_cast<int>(it - (e.begin() + 1));
}

void MarkovChannelModel::validate() const {
  if (states_ < 2) throw std::invalid_argument("markov model: states must be >= 2");
  const int locs = locations();
  for (std::size_t li = 0; li < links_.size(); ++li) {
    const auto& l = links_[li];
    const std::string where = "markov model link " + std::to_string(li);
    if (l.edges.size() != static_cast<std::size_t>(states_ + 1) ||
        l.representatives.size() != static_cast<std::size_t>(states_)) {
      throw std::invalid_argument(where + ": edge/representative count mismatch");
    }
    for (int i = 0; i < states_; ++i) {
      if (!(l.edges[i] < l.edges[i + 1])) throw std::invalid_argument(where + ": bin edges not strictly increasing");
      if (!(l.representatives[i] >= l.edges[i] && l.representatives[i] <= l.edges[i + 1])) {
        throw std::invalid_argument(where + ": representative " + std::to_string(i) + " outside its bin");
      }
    }
    if (static_cast<int>(l.transitions.size()) != locs || static_cast<int>(l.occupancy.size()) != locs) {
      throw std::invalid_argument(where + ": location count mismatch");
    }
    for (int loc = 0; loc < locs; ++loc) {
      if (l.transitions[loc].size() != static_cast<std::size_t>(states_ * states_) ||
          l.occupancy[loc].size() != static_cast<std::size_t>(states_)) {
        throw std::invalid_argument(where + ": matrix size mismatch");
      }
      for (int i = 0; i < states_; ++i) {
        double sum = 0.0;
        for (double p : row(static_cast<int>(li), loc, i)) {
          if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(where + ": transition entry outside [0,1]");
          sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument(where + ": transition row does not sum to 1");
      }
    }
  }
}

void MarkovChannelModel::save(std::ostream& out) const {
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "states " << states_ << '\n';
  out << "links " << links_.size() << '\n';
  out << "locations " << locations() << '\n';
  for (std::size_t li = 0; li < links_.size(); ++li) {
    const auto& l = links_[li];
    const std::string tag = "link " + std::to_string(li);
    write_row(out, tag + " edges", l.edges);
    write_row(out, tag + " representatives", l.representatives);
    for (int loc = 0; loc < locations(); ++loc) {
      const std::string ltag = tag + " location " + std::to_string(loc);
      write_row(out, ltag + " occupancy", l.occupancy[loc]);
      for (int i = 0; i < states_; ++i) {
        write_row(out, ltag + " row " + std::to_string(i), row(static_cast<int>(li), loc, i));
      }
    }
  }
  out << "end\n";
}

MarkovChannelModel MarkovChannelModel::load(std::istream& in) {
  TextReader reader(in);
  const std::string header_line = reader.raw();
  const auto header = split_whitespace(header_line);
  if (header.size() != 2 || header[0] != kModelMagic) throw ParseError("not a relaynet markov model file");
  if (parse_integer(header[1], "version") != kModelVersion) {
    throw ParseError("unsupported markov model version " + std::string(header[1]) + " (expected " +
                     std::to_string(kModelVersion) + ")");
  }
  const int states = static_cast<int>(reader.integer("states"));
  const long long link_count = reader.integer("links");
  const long long locs = reader.integer("locations");
  if (states < 2 || link_count < 1 || locs < 1) throw ParseError("markov model header out of range");
  std::vector<Link> links(static_cast<std::size_t>(link_count));
  const auto m = static_cast<std::size_t>(states);
  for (std::size_t li = 0; li < links.size(); ++li) {
    const std::string lt = std::to_string(li);
    links[li].edges = reader.values({"link", lt, "edges"}, m + 1);
    links[li].representatives = reader.values({"link", lt, "representatives"}, m);
    for (long long loc = 0; loc < locs; ++loc) {
      const std::string lc = std::to_string(loc);
      links[li].occupancy.push_back(reader.values({"link", lt, "location", lc, "occupancy"}, m));
      std::vector<double> matrix;
      for (std::size_t i = 0; i < m; ++i) {
        auto r = reader.values({"link", lt, "location", lc, "row", std::to_string(i)}, m);
        matrix.insert(matrix.end(), r.begin(), r.end());
      }
      links[li].transitions.push_back(std::move(matrix));
    }
  }
  if (const std::string last = reader.raw(); split_whitespace(last) != std::vector<std::string_view>{"end"}) throw ParseError("missing end marker");
  return MarkovChannelModel(states, std::move(links));
}

MarkovChannelModel build_markov_model(const NetworkConfig& config,
                                      const std::vector<RelayCandidates>& candidates,
                                      const MarkovBuildOptions& options) {
  config.validate();
  if (options.states < 2) throw std::invalid_argument("build_markov_model: states must be >= 2");
  if (!(options.correlation >= 0.0 && options.correlation < 1.0)) {
    throw std::invalid_argument("build_markov_model: correlation must be in [0, 1)");
  }
  if (options.sample_budget < 10000) throw std::invalid_argument("build_markov_model: sample_budget must be >= 1e4");
  if (static_cast<int>(candidates.size()) != config.relays) {
    throw std::invalid_argument("build_markov_model: candidate sets do not match relay count");
  }
  const std::size_t locs = candidates.front().source_distance.size();
  for (const auto& c : candidates) {
    if (c.source_distance.size() != locs || c.destination_distance.size() != locs || locs == 0) {
      throw std::invalid_argument("build_markov_model: every relay needs the same number of locations");
    }
  }

  const int m = options.states;
  const std::size_t n = options.sample_budget;
  std::vector<MarkovChannelModel::Link> links;
  for (int relay = 0; relay < config.relays; ++relay) {
    for (int hop = 0; hop < 2; ++hop) {
      const int link_index = 2 * relay + hop;
      const int antennas = hop == 0 ? config.source_antennas : config.destination_antennas;
      const auto& dists = hop == 0 ? candidates[relay].source_distance : candidates[relay].destination_distance;

      std::vector<std::vector<double>> per_location;
      per_location.reserve(locs);
      for (std::size_t loc = 0; loc < locs; ++loc) {
        Rng rng = make_rng(options.seed, {static_cast<std::uint64_t>(link_index), loc});
        per_location.push_back(simulate_gains(rng, config.link_variance(dists[loc]), antennas,
                                              options.correlation, n));
      }

      std::vector<double> pooled;
      pooled.reserve(n * locs);
      for (const auto& g : per_location) pooled.insert(pooled.end(), g.begin(), g.end());
      std::sort(pooled.begin(), pooled.end());
      const std::size_t total = pooled.size();

      MarkovChannelModel::Link link;
      link.edges.assign(static_cast<std::size_t>(m + 1), 0.0);
      link.edges.back() = std::numeric_limits<double>::infinity();
      for (int i = 1; i < m; ++i) link.edges[i] = pooled[static_cast<std::size_t>(i) * total / m];

      std::vector<std::size_t> bin_start(static_cast<std::size_t>(m + 1), total);
      bin_start[0] = 0;
      for (int i = 1; i < m; ++i) {
        bin_start[i] = static_cast<std::size_t>(
            std::lower_bound(pooled.begin(), pooled.end(), link.edges[i]) - pooled.begin());
      }
      for (int i = 0; i < m; ++i) {
        if (bin_start[i + 1] <= bin_start[i] || !(link.edges[i] < link.edges[i + 1])) {
          throw std::runtime_error("build_markov_model: link " + std::to_string(link_index) + " bin " +
                                   std::to_string(i) + " is empty after sampling");
        }
        const std::size_t lo = bin_start[i];
        const std::size_t hi = bin_start[i + 1];
        const std::size_t mid = lo + (hi - lo) / 2;
        link.representatives.push_back((hi - lo) % 2 == 1 ? pooled[mid] : 0.5 * (pooled[mid - 1] + pooled[mid]));
      }

      for (std::size_t loc = 0; loc < locs; ++loc) {
        std::vector<int> states(n);
        std::vector<double> counts(static_cast<std::size_t>(m * m), 0.0);
        std::vector<double> occupancy(static_cast<std::size_t>(m), 0.0);
        for (std::size_t t = 0; t < n; ++t) {
          auto it = std::upper_bound(link.edges.begin() + 1, link.edges.end() - 1, per_location[loc][t]);
          states[t] = static_cast<int>(it - (link.edges.begin() + 1));
          occupancy[states[t]] += 1.0;
          if (t > 0) counts[static_cast<std::size_t>(states[t - 1] * m + states[t])] += 1.0;
        }
        for (double& o : occupancy) o /= static_cast<double>(n);
        for (int i = 0; i < m; ++i) {
          auto first = counts.begin() + static_cast<std::ptrdiff_t>(i) * m;
          const double row_total = std::accumulate(first, first + m, 0.0);
          if (row_total == 0.0) {
            std::copy(occupancy.begin(), occupancy.end(), first);
          } else {
            std::for_each(first, first + m, [row_total](double& c) { c /= row_total; });
          }
          // exact renormalization after division
          const double s = std::accumulate(first, first + m, 0.0);
          std::for_each(first, first + m, [s](double& c) { c /= s; });
        }
        link.transitions.push_back(std::move(counts));
        link.occupancy.push_back(std::move(occupancy));
      }
      links.push_back(std::move(link));
    }
  }
  return MarkovChannelModel(m, std::move(links));
}

}  // namespace relaynet
