#include "relaynet/common.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cctype>
#include <cstring>

namespace relaynet {

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * tags.size());
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(base);
  for (std::uint64_t t : tags) push(t);
  std::seed_seq seq(words.begin(), words.end());
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::uint64_t fnv1a(const std::vector<double>& values, std::uint64_t hash) {
  for (double v : values) {
    char buf[sizeof(double)];
    std::memcpy(buf, &v, sizeof(double));
    hash = fnv1a(std::string_view(buf, sizeof(double)), hash);
  }
  return hash;
}

std::string to_hex(std::uint64_t value) {
  char buf[17];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value, 16);
  std::string s(buf, end);
  return std::string(16 - s.size(), '0') + s;
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("cannot format number");
  return std::string(buf, end);
}

double parse_double(std::string_view token, std::string_view field) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  // from_chars rejects a leading '+', which some writers emit
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || token.empty()) {
    throw ParseError("invalid number '" + std::string(token) + "' in field " + std::string(field));
  }
  return value;
}

long long parse_integer(std::string_view token, std::string_view field) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
    throw ParseError("invalid integer '" + std::string(token) + "' in field " + std::string(field));
  }
  return value;
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<double> TextReader::values(const std::vector<std::string>& prefix, std::size_t count) {
  std::string field;
  for (const auto& p : prefix) field += (field.empty() ? "" : ".") + p;
  if (!std::getline(in_, line_)) throw ParseError("unexpected end of file before field " + field);
  const auto tokens = split_whitespace(line_);
  if (tokens.size() != prefix.size() + count) {
    throw ParseError("field " + field + ": expected " + std::to_string(count) + " values, got " +
                     std::to_string(tokens.size() >= prefix.size() ? tokens.size() - prefix.size() : 0));
  }
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (tokens[i] != prefix[i]) throw ParseError("expected field " + field + ", found '" + line_ + "'");
  }
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = parse_double(tokens[prefix.size() + i], field + "[" + std::to_string(i) + "]");
  }
  return out;
}

long long TextReader::integer(const std::string& key) {
  if (!std::getline(in_, line_)) throw ParseError("unexpected end of file before field " + key);
  const auto tokens = split_whitespace(line_);
  if (tokens.size() != 2 || tokens[0] != key) throw ParseError("expected field " + key + ", found '" + line_ + "'");
  return parse_integer(tokens[1], key);
}

std::string TextReader::raw() {
  if (!std::getline(in_, line_)) throw ParseError("unexpected end of file");
  return line_;
}

std::string TextReader::text(const std::string& key) {
  if (!std::getline(in_, line_)) throw ParseError("unexpected end of file before field " + key);
  if (line_.compare(0, key.size() + 1, key + " ") != 0) throw ParseError("expected field " + key + ", found '" + line_ + "'");
  return line_.substr(key.size() + 1);
}

}  // namespace relaynet
