#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace crrr {

inline double mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean: empty input");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Population variance (divide by n).
inline double variance(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

// Sample variance (divide by n - 1).
inline double sample_variance(std::span<const double> v) {
  if (v.size() < 2) throw std::invalid_argument("sample_variance: need n >= 2");
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// Linear interpolation between order statistics at h = (n-1)p. This one
// convention backs every quantile in the project: threshold grids,
// normalizer scales, and bootstrap interquartile ranges.
inline double empirical_quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("empirical_quantile: empty input");
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("empirical_quantile: p must lie in [0, 1]");
  }
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double empirical_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  return empirical_quantile_sorted(v, p);
}

inline double iqr_sorted(std::span<const double> sorted) {
  return empirical_quantile_sorted(sorted, 0.75) -
         empirical_quantile_sorted(sorted, 0.25);
}

inline double iqr(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return iqr_sorted(v);
}

// P(K <= t) for the Kolmogorov distribution. Theta-series form for small t,
// alternating series otherwise; both truncated far below double precision.
inline double kolmogorov_cdf(double t) {
  if (t <= 0.0) return 0.0;
  if (t < 1.18) {
    const double f = std::numbers::pi * std::numbers::pi / (8.0 * t * t);
    double s = 0.0;
    for (int k = 1; k <= 20; k += 2) {
      const double term = std::exp(-f * k * k);
      s += term;
      if (term < 1e-18) break;
    }
    return std::sqrt(2.0 * std::numbers::pi) / t * s;
  }
  double s = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    s += sign * term;
    sign = -sign;
    if (term < 1e-18) break;
  }
  return 1.0 - 2.0 * s;
}

struct GofResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// One-sample Kolmogorov-Smirnov test against U(0,1); asymptotic p-value
// from the Kolmogorov distribution at sqrt(n) * D.
inline GofResult ks_uniform_test(std::span<const double> u) {
  if (u.size() < 10) throw std::invalid_argument("ks_uniform_test: need n >= 10");
  std::vector<double> s(u.begin(), u.end());
  for (double x : s) {
    if (!(x >= 0.0 && x <= 1.0)) {
      throw std::invalid_argument("ks_uniform_test: values must lie in [0, 1]");
    }
  }
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double hi = (static_cast<double>(i) + 1.0) / n - s[i];
    const double lo = s[i] - static_cast<double>(i) / n;
    d = std::fmax(d, std::fmax(hi, lo));
  }
  return {d, 1.0 - kolmogorov_cdf(std::sqrt(n) * d)};
}

namespace detail {

// Regularized upper incomplete gamma Q(a, x): series for x < a + 1,
// continued fraction otherwise.
inline double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - lg);
  }
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - lg) * h;
}

}  // namespace detail

inline double chi2_sf(double stat, int df) {
  if (df < 1) throw std::invalid_argument("chi2_sf: df must be positive");
  if (stat <= 0.0) return 1.0;
  return detail::gamma_q(0.5 * df, 0.5 * stat);
}

// Pearson chi-square test against U(0,1) with equal-width bins; u == 1
// falls into the last bin. df = bins - 1.
inline GofResult chi2_uniform_test(std::span<const double> u, int bins) {
  if (bins < 2) throw std::invalid_argument("chi2_uniform_test: bins must be >= 2");
  if (u.size() < static_cast<std::size_t>(5 * bins)) {
    throw std::invalid_argument("chi2_uniform_test: need n >= 5 * bins");
  }
  std::vector<std::size_t> count(static_cast<std::size_t>(bins), 0);
  for (double x : u) {
    if (!(x >= 0.0 && x <= 1.0)) {
      throw std::invalid_argument("chi2_uniform_test: values must lie in [0, 1]");
    }
    auto b = static_cast<std::size_t>(x * bins);
    if (b >= static_cast<std::size_t>(bins)) b = static_cast<std::size_t>(bins) - 1;
    ++count[b];
  }
  const double expected = static_cast<double>(u.size()) / bins;
  double stat = 0.0;
  for (std::size_t c : count) {
    const double diff = static_cast<double>(c) - expected;
    stat += diff * diff / expected;
  }
  return {stat, chi2_sf(stat, bins - 1)};
}

}  // namespace crrr
