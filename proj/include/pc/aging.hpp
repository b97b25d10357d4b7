#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pc/core.hpp"
#include "pc/error.hpp"

namespace pc {

/// Exponentially aged running average: value = sum_k g^k e_{t-k} / sum_k g^k.
class AgedAverage {
 public:
  explicit AgedAverage(double decay = 0.0) : decay_(decay) {
    if (!(decay >= 0.0 && decay < 1.0)) throw DomainError("AgedAverage: decay must lie in [0,1)");
  }

  void push(std::span<const double> estimate) {
    if (weighted_.empty()) weighted_.assign(estimate.size(), 0.0);
    if (weighted_.size() != estimate.size()) throw DimensionError("AgedAverage: estimate length changed");
    for (std::size_t k = 0; k < estimate.size(); ++k) weighted_[k] = estimate[k] + decay_ * weighted_[k];
    mass_ = 1.0 + decay_ * mass_;
  }

  bool empty() const { return mass_ == 0.0; }

  Row value() const {
    if (empty()) throw DomainError("AgedAverage: no estimates yet");
    Row out(weighted_);
    for (double& v : out) v /= mass_;
    return out;
  }

 private:
  double decay_;
  double mass_ = 0.0;
  Row weighted_;
};

/// Exponentially weighted average of a history (oldest first); decay 0 returns the latest entry.
inline Row aged_estimate(std::span<const Row> history, double decay) {
  if (history.empty()) throw DomainError("aged_estimate: empty history");
  AgedAverage avg(decay);
  for (const auto& h : history) avg.push(h);
  return avg.value();
}

}  // namespace pc
