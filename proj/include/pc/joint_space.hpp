#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pc/error.hpp"

namespace pc {

/// Hard cap on the number of points of any explicitly enumerated joint space.
inline constexpr std::size_t kMaxEnumeratedPoints = std::size_t{1} << 20;

/// One move index per agent.
struct JointConfiguration {
  std::vector<std::size_t> values;

  JointConfiguration() = default;
  explicit JointConfiguration(std::vector<std::size_t> v) : values(std::move(v)) {}
  JointConfiguration(std::initializer_list<std::size_t> v) : values(v) {}

  std::size_t size() const { return values.size(); }
  std::size_t& operator[](std::size_t i) { return values[i]; }
  std::size_t operator[](std::size_t i) const { return values[i]; }

  auto operator<=>(const JointConfiguration&) const = default;
};

inline std::string to_string(const JointConfiguration& x) {
  std::string s;
  bool digits = true;
  for (auto v : x.values) digits = digits && v < 10;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!digits && i > 0) s += ',';
    s += std::to_string(x[i]);
  }
  return s;
}

inline std::size_t hamming_distance(const JointConfiguration& a, const JointConfiguration& b) {
  if (a.size() != b.size()) throw DimensionError("hamming_distance: length mismatch");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

/// Number of points of the product space, or throws when it exceeds `cap`.
inline std::size_t joint_size(std::span<const std::size_t> arities,
                              std::size_t cap = kMaxEnumeratedPoints) {
  std::size_t total = 1;
  for (auto a : arities) {
    if (a == 0) throw DimensionError("joint_size: zero arity");
    if (total > cap / a) throw CapacityError("joint space exceeds " + std::to_string(cap) + " points");
    total *= a;
  }
  return total;
}

/// Row-major index: the first coordinate is the most significant digit.
inline std::size_t encode(std::span<const std::size_t> arities, std::span<const std::size_t> values) {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < arities.size(); ++k) idx = idx * arities[k] + values[k];
  return idx;
}

inline void decode(std::span<const std::size_t> arities, std::size_t idx, std::span<std::size_t> out) {
  for (std::size_t k = arities.size(); k-- > 0;) {
    out[k] = idx % arities[k];
    idx /= arities[k];
  }
}

inline JointConfiguration decode(std::span<const std::size_t> arities, std::size_t idx) {
  JointConfiguration x(std::vector<std::size_t>(arities.size(), 0));
  decode(arities, idx, x.values);
  return x;
}

/// Advances `values` as an odometer (last coordinate fastest). Returns false after wrap-around.
inline bool next_configuration(std::span<const std::size_t> arities, std::span<std::size_t> values) {
  for (std::size_t k = arities.size(); k-- > 0;) {
    if (++values[k] < arities[k]) return true;
    values[k] = 0;
  }
  return false;
}

/// Calls `fn(const JointConfiguration&)` for every point, in row-major order.
template <class Fn>
void for_each_configuration(std::span<const std::size_t> arities, Fn&& fn,
                            std::size_t cap = kMaxEnumeratedPoints) {
  joint_size(arities, cap);
  JointConfiguration x(std::vector<std::size_t>(arities.size(), 0));
  do {
    fn(static_cast<const JointConfiguration&>(x));
  } while (next_configuration(arities, x.values));
}

/// Full probability table over an enumerable joint space.
struct DenseDistribution {
  std::vector<std::size_t> arities;
  std::vector<double> probs;

  double operator()(const JointConfiguration& x) const { return probs[encode(arities, x.values)]; }
  std::size_t size() const { return probs.size(); }

  double total() const {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
  }
};

}  // namespace pc
