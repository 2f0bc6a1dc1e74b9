#pragma once

#include <memory>
#include <span>

namespace crrr {

// Reported conditional CDF values stay this far from 0 and 1 so that
// downstream logs and logits remain finite.
inline constexpr double kCdfClamp = 1e-12;

// A fitted conditional distribution, evaluated pointwise. For continuous
// outcomes cdf and cdf_left coincide; for ordinal outcomes cdf_left is the
// probability of strictly smaller categories.
struct ConditionalCdfModel {
  virtual ~ConditionalCdfModel() = default;
  virtual double cdf(double r, std::span<const double> x) const = 0;
  virtual double cdf_left(double r, std::span<const double> x) const = 0;
};

using ModelPtr = std::unique_ptr<ConditionalCdfModel>;

}  // namespace crrr
