#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "crrr/dgp.hpp"
#include "crrr/special.hpp"

namespace crrr {

// Population rank-rank slopes for the benchmark designs.

// Slope of a rank-rank regression when the outcome pair is bivariate
// normal (equivalently, shares a Gaussian copula) with correlation rho.
inline double true_rho_simple(double rho_p) {
  if (!(std::fabs(rho_p) <= 1.0)) {
    throw std::invalid_argument("true_rho_simple: |rho| must be <= 1");
  }
  return 6.0 / std::numbers::pi * std::asin(0.5 * rho_p);
}

// rho_C as a function of the tie parameter. Ranks are affine in omega,
// U = A + omega*D with A = F^- and D = F - F^-, so both the covariance
// and the regressor variance are quadratics in omega and the slope is
// their ratio.
struct RhoCurve {
  double num0 = 0, num1 = 0, num2 = 0;  // Cov(U(omega), V(omega))
  double den0 = 0, den1 = 0, den2 = 0;  // Var(V(omega))

  double eval(double omega) const {
    const double num = (num2 * omega + num1) * omega + num0;
    const double den = (den2 * omega + den1) * omega + den0;
    if (!(den > 0.0)) throw std::domain_error("RhoCurve: regressor variance vanished");
    return num / den;
  }
};

// Accumulates raw moments of (A_y, D_y, A_w, D_w) over weighted atoms:
// probability cells for the closed form, unit-weight draws for Monte
// Carlo. finish() centers them into the curve coefficients.
struct RhoCurveAccumulator {
  long double wsum = 0;
  long double ay = 0, dy = 0, aw = 0, dw = 0;
  long double ay_aw = 0, ay_dw = 0, dy_aw = 0, dy_dw = 0;
  long double aw_aw = 0, aw_dw = 0, dw_dw = 0;

  void add(double f_lo_y, double f_hi_y, double f_lo_w, double f_hi_w, double weight = 1.0) {
    const long double a_y = f_lo_y, d_y = f_hi_y - f_lo_y;
    const long double a_w = f_lo_w, d_w = f_hi_w - f_lo_w;
    const long double w = weight;
    wsum += w;
    ay += w * a_y;
    dy += w * d_y;
    aw += w * a_w;
    dw += w * d_w;
    ay_aw += w * a_y * a_w;
    ay_dw += w * a_y * d_w;
    dy_aw += w * d_y * a_w;
    dy_dw += w * d_y * d_w;
    aw_aw += w * a_w * a_w;
    aw_dw += w * a_w * d_w;
    dw_dw += w * d_w * d_w;
  }

  RhoCurve finish() const {
    if (!(wsum > 0)) throw std::domain_error("RhoCurveAccumulator: no mass accumulated");
    const long double may = ay / wsum, mdy = dy / wsum;
    const long double maw = aw / wsum, mdw = dw / wsum;
    RhoCurve c;
    c.num0 = double(ay_aw / wsum - may * maw);
    c.num1 = double(ay_dw / wsum - may * mdw + dy_aw / wsum - mdy * maw);
    c.num2 = double(dy_dw / wsum - mdy * mdw);
    c.den0 = double(aw_aw / wsum - maw * maw);
    c.den1 = 2.0 * double(aw_dw / wsum - maw * mdw);
    c.den2 = double(dw_dw / wsum - mdw * mdw);
    return c;
  }
};

namespace detail {

// P(Z1 <= a, Z2 <= b) with infinite bounds allowed.
inline double joint_normal_cdf(double a, double b, double rho) {
  if (a == -std::numeric_limits<double>::infinity() ||
      b == -std::numeric_limits<double>::infinity()) {
    return 0.0;
  }
  const bool ainf = a == std::numeric_limits<double>::infinity();
  const bool binf = b == std::numeric_limits<double>::infinity();
  if (ainf && binf) return 1.0;
  if (ainf) return std_normal_cdf(b);
  if (binf) return std_normal_cdf(a);
  return binormal_cdf(a, b, rho);
}

}  // namespace detail

// Closed-form curve for the discretized simple design: per covariate
// group the cell probabilities are bivariate-normal rectangles at the
// standardized cutoffs, and the exact conditional CDF values are the
// univariate normal CDF at the same points.
inline RhoCurve simple_discrete_truth_curve(const DgpSpec& spec) {
  if (spec.kind != DgpKind::simple_discrete) {
    throw std::invalid_argument("simple_discrete_truth_curve: wrong design kind");
  }
  spec.validate();
  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t ky = spec.cutoffs_y.size() + 1;
  const std::size_t kw = spec.cutoffs_w.size() + 1;

  RhoCurveAccumulator acc;
  for (const double group : {0.0, 1.0}) {
    const double mu_y = spec.mu_y;
    const double mu_w = spec.mu_w - spec.delta * group;

    std::vector<double> a(ky + 1), b(kw + 1);
    a.front() = b.front() = -inf;
    a.back() = b.back() = inf;
    for (std::size_t k = 1; k < ky; ++k) a[k] = (spec.cutoffs_y[k - 1] - mu_y) / spec.sigma;
    for (std::size_t k = 1; k < kw; ++k) b[k] = (spec.cutoffs_w[k - 1] - mu_w) / spec.sigma;

    std::vector<std::vector<double>> grid(ky + 1, std::vector<double>(kw + 1));
    for (std::size_t i = 0; i <= ky; ++i) {
      for (std::size_t j = 0; j <= kw; ++j) {
        grid[i][j] = detail::joint_normal_cdf(a[i], b[j], spec.rho_p);
      }
    }
    for (std::size_t i = 0; i < ky; ++i) {
      const double f_lo_y = std_normal_cdf(a[i]);
      const double f_hi_y = std_normal_cdf(a[i + 1]);
      for (std::size_t j = 0; j < kw; ++j) {
        const double cell =
            grid[i + 1][j + 1] - grid[i][j + 1] - grid[i + 1][j] + grid[i][j];
        if (cell <= 0.0) continue;  // quadrature dust on far-tail cells
        acc.add(f_lo_y, f_hi_y, std_normal_cdf(b[j]), std_normal_cdf(b[j + 1]), 0.5 * cell);
      }
    }
  }
  return acc.finish();
}

inline constexpr std::uint64_t kTruthOracleSeed = 424242;
inline constexpr long kTruthOracleDraws = 4'000'000;

// Monte Carlo curve for the discretized complex design. Draws replay
// the generative model; the conditional CDF values at the observed
// category's cell edges are exact, obtained by inverting the warp.
inline RhoCurve complex_discrete_truth_curve(const DgpSpec& spec,
                                             long draws = kTruthOracleDraws,
                                             std::uint64_t seed = kTruthOracleSeed) {
  if (spec.kind != DgpKind::complex_discrete) {
    throw std::invalid_argument("complex_discrete_truth_curve: wrong design kind");
  }
  spec.validate();
  if (draws < 1000) throw std::invalid_argument("complex_discrete_truth_curve: draws too small");

  // F(edge | x) = Phi(g^{-1}((c - m(x)) / s(x))) for a finite cell edge.
  const auto edge_cdf = [](double cut, double m, double s, double alpha, double beta) {
    return std_normal_cdf(monotone_warp_inv((cut - m) / s, alpha, beta));
  };
  const auto cell_of = [](double value, const std::vector<double>& cuts) {
    std::size_t k = 0;
    while (k < cuts.size() && cuts[k] < value) ++k;
    return k;
  };

  RngStream rng(seed);
  const double mix = std::sqrt(1.0 - spec.rho0 * spec.rho0);
  const int p = spec.p;
  std::vector<double> x(static_cast<std::size_t>(p));
  RhoCurveAccumulator acc;
  for (long i = 0; i < draws; ++i) {
    for (int j = 0; j < p; ++j) x[static_cast<std::size_t>(j)] = rng.uniform(-1.0, 1.0);
    const double z1 = rng.normal();
    const double z2 = spec.rho0 * z1 + mix * rng.normal();
    const double my = complex_mean_y(x), sy = complex_scale_y(x);
    const double mw = complex_mean_w(x), sw = complex_scale_w(x);
    const double yval = my + sy * monotone_warp(z1, spec.alpha_y, spec.beta_y);
    const double wval = mw + sw * monotone_warp(z2, spec.alpha_w, spec.beta_w);

    const std::size_t cy = cell_of(yval, spec.cutoffs_y);
    const std::size_t cw = cell_of(wval, spec.cutoffs_w);
    const double f_lo_y =
        cy == 0 ? 0.0 : edge_cdf(spec.cutoffs_y[cy - 1], my, sy, spec.alpha_y, spec.beta_y);
    const double f_hi_y =
        cy == spec.cutoffs_y.size()
            ? 1.0
            : edge_cdf(spec.cutoffs_y[cy], my, sy, spec.alpha_y, spec.beta_y);
    const double f_lo_w =
        cw == 0 ? 0.0 : edge_cdf(spec.cutoffs_w[cw - 1], mw, sw, spec.alpha_w, spec.beta_w);
    const double f_hi_w =
        cw == spec.cutoffs_w.size()
            ? 1.0
            : edge_cdf(spec.cutoffs_w[cw], mw, sw, spec.alpha_w, spec.beta_w);
    acc.add(f_lo_y, f_hi_y, f_lo_w, f_hi_w);
  }
  return acc.finish();
}

// Unified truth curve. Continuous designs have omega-free slopes, so the
// curve is the constant true_rho_simple value.
inline RhoCurve true_rho_curve(const DgpSpec& spec, long oracle_draws = kTruthOracleDraws,
                               std::uint64_t oracle_seed = kTruthOracleSeed) {
  switch (spec.kind) {
    case DgpKind::simple_normal: {
      RhoCurve c;
      c.num0 = true_rho_simple(spec.rho_p);
      c.den0 = 1.0;
      return c;
    }
    case DgpKind::complex_continuous: {
      RhoCurve c;
      c.num0 = true_rho_simple(spec.rho0);
      c.den0 = 1.0;
      return c;
    }
    case DgpKind::simple_discrete:
      return simple_discrete_truth_curve(spec);
    case DgpKind::complex_discrete:
      return complex_discrete_truth_curve(spec, oracle_draws, oracle_seed);
  }
  throw std::logic_error("true_rho_curve: bad kind");
}

inline double true_rho_discrete(const DgpSpec& spec, double omega,
                                long oracle_draws = kTruthOracleDraws,
                                std::uint64_t oracle_seed = kTruthOracleSeed) {
  if (!(omega >= 0.0 && omega <= 1.0)) {
    throw std::invalid_argument("true_rho_discrete: omega must lie in [0, 1]");
  }
  if (!spec.discrete()) {
    throw std::invalid_argument("true_rho_discrete: design has no ties");
  }
  return true_rho_curve(spec, oracle_draws, oracle_seed).eval(omega);
}

}  // namespace crrr
