#pragma once

#include <cstdint>
#include <initializer_list>
#include <istream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace relaynet {

using Rng = std::mt19937_64;

/// Raised when an action falls outside the feasible region.
class InvalidAction : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a persisted text file cannot be read back.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Derives an independent stream seed from a base seed and a list of tags
/// (episode, parameter, trial, ...). Equal inputs give equal seeds on every
/// platform.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
  return Rng(derive_seed(base, tags));
}

/// 64-bit FNV-1a, used for config fingerprints and parameter traces.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash = 14695981039346656037ull);
std::uint64_t fnv1a(const std::vector<double>& values, std::uint64_t hash = 14695981039346656037ull);

std::string to_hex(std::uint64_t value);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

/// Parses a full token as a double; `field` names the value in the error.
double parse_double(std::string_view token, std::string_view field);
long long parse_integer(std::string_view token, std::string_view field);

std::vector<std::string_view> split_whitespace(std::string_view line);
// The views would dangle.
std::vector<std::string_view> split_whitespace(std::string&&) = delete;

/// Sequential reader for the line-oriented text formats. Each line is a
/// label path followed by values; errors name the dotted field path.
class TextReader {
 public:
  explicit TextReader(std::istream& in) : in_(in) {}

  std::vector<double> values(const std::vector<std::string>& prefix, std::size_t count);
  long long integer(const std::string& key);
  std::string text(const std::string& key);
  std::string raw();

 private:
  std::istream& in_;
  std::string line_;
};

}  // namespace relaynet
