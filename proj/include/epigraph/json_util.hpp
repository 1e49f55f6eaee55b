#pragma once

// Small helpers for reading configuration JSON with error messages that name
// the offending field, e.g. "progression.transitions[3].probability[8]".

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "epigraph/types.hpp"
#include "json.hpp"

namespace epigraph {

using Json = nlohmann::json;

// Parses a file, accepting // and /* */ comments.
inline Json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return Json::parse(buf.str(), nullptr, true, /*ignore_comments=*/true);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

class JsonField {
 public:
  JsonField(const Json& value, std::string path) : value_(value), path_(std::move(path)) {}

  const Json& value() const noexcept { return value_; }
  const std::string& path() const noexcept { return path_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(path_ + ": " + what);
  }

  bool has(const char* key) const { return value_.is_object() && value_.contains(key); }

  JsonField operator[](const char* key) const {
    if (!value_.is_object()) fail("expected an object");
    const auto it = value_.find(key);
    if (it == value_.end()) {
      throw ConfigError(path_ + "." + key + ": missing required field");
    }
    return {*it, path_ + "." + key};
  }

  JsonField operator[](std::size_t i) const {
    return {value_.at(i), path_ + "[" + std::to_string(i) + "]"};
  }

  std::size_t size() const {
    if (!value_.is_array()) fail("expected an array");
    return value_.size();
  }

  double number() const {
    if (!value_.is_number()) fail("expected a number");
    const double v = value_.get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }

  double number_at_least(double lo) const {
    const double v = number();
    if (v < lo) fail("must be >= " + std::to_string(lo));
    return v;
  }

  double probability() const {
    const double v = number();
    if (v < 0.0 || v > 1.0) fail("must be a probability in [0, 1]");
    return v;
  }

  long long integer() const {
    if (!value_.is_number_integer()) fail("expected an integer");
    return value_.get<long long>();
  }

  bool boolean() const {
    if (!value_.is_boolean()) fail("expected true or false");
    return value_.get<bool>();
  }

  std::string string() const {
    if (!value_.is_string()) fail("expected a string");
    return value_.get<std::string>();
  }

  // Array of exactly `n` numbers, each >= lo.
  std::vector<double> numbers(std::size_t n, double lo = -HUGE_VAL) const {
    if (size() != n) fail("expected " + std::to_string(n) + " entries, got " + std::to_string(size()));
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back((*this)[i].number_at_least(lo));
    return out;
  }

  // A scalar broadcast to `n` entries, or an array of exactly `n`.
  std::vector<double> scalar_or_numbers(std::size_t n, double lo = -HUGE_VAL) const {
    if (value_.is_array()) return numbers(n, lo);
    return std::vector<double>(n, number_at_least(lo));
  }

  // Probability vector summing to 1 within 1e-9.
  std::vector<double> distribution(std::size_t n) const {
    auto p = numbers(n, 0.0);
    double total = 0.0;
    for (double v : p) total += v;
    if (std::abs(total - 1.0) > 1e-9) fail("probabilities sum to " + std::to_string(total) + ", expected 1");
    return p;
  }

 private:
  const Json& value_;
  std::string path_;
};

// Optional-field accessors with defaults.
inline double number_or(const JsonField& obj, const char* key, double fallback) {
  return obj.has(key) ? obj[key].number() : fallback;
}
inline double probability_or(const JsonField& obj, const char* key, double fallback) {
  return obj.has(key) ? obj[key].probability() : fallback;
}
inline long long integer_or(const JsonField& obj, const char* key, long long fallback) {
  return obj.has(key) ? obj[key].integer() : fallback;
}
inline bool boolean_or(const JsonField& obj, const char* key, bool fallback) {
  return obj.has(key) ? obj[key].boolean() : fallback;
}
inline std::string string_or(const JsonField& obj, const char* key, std::string fallback) {
  return obj.has(key) ? obj[key].string() : std::move(fallback);
}

}  // namespace epigraph
