#pragma once

// Rank-rank regression estimators on conditional or marginal ranks: the
// OLS-slope, Pearson-correlation, and centered-covariance forms, plus the
// weighted analogues the bootstrap substitutes for plain sample moments.
//
// Orientation: u is the child rank (response), v is the parent rank
// (regressor), so the slope form divides by the parent-rank variance.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <crrr/ranks.hpp>

namespace crrr {

// Out-of-fold conditional ranks together with the fold assignment that
// produced them. omega is set only for ordinal outcomes; continuous ranks
// do not depend on it.
struct RankSet {
  std::vector<double> u_hat;
  std::vector<double> v_hat;
  std::vector<int> fold;
  int folds = 0;
  std::optional<double> omega;
};

namespace detail {

struct RankMoments {
  double mean_u = 0.0;
  double mean_v = 0.0;
  double var_u = 0.0;   // population convention; every ratio below cancels it
  double var_v = 0.0;
  double cov = 0.0;
  double weight_sum = 0.0;
};

// Weighted first and second moments. Empty weights become a literal vector of
// ones running through the same loop, so the reduction of every weighted
// estimator to its unweighted form is bitwise exact: a compile-time-known
// unit weight would let the optimizer simplify the arithmetic and round
// differently from the runtime-weighted code.
inline RankMoments rank_moments(std::span<const double> u,
                                std::span<const double> v,
                                std::span<const double> weights) {
  const std::size_t n = u.size();
  if (n == 0 || v.size() != n)
    throw std::invalid_argument("rank_moments: need equal-length non-empty rank vectors");
  if (weights.empty()) {
    const std::vector<double> ones(n, 1.0);
    return rank_moments(u, v, ones);
  }
  if (weights.size() != n)
    throw std::invalid_argument("rank_moments: weights length mismatch");

  RankMoments m;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights[i];
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("rank_moments: weights must be finite and nonnegative");
    m.weight_sum += w;
    m.mean_u += w * u[i];
    m.mean_v += w * v[i];
  }
  if (!(m.weight_sum > 0.0))
    throw std::invalid_argument("rank_moments: total weight must be positive");
  m.mean_u /= m.weight_sum;
  m.mean_v /= m.weight_sum;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights[i];
    const double cu = u[i] - m.mean_u;
    const double cv = v[i] - m.mean_v;
    m.var_u += w * cu * cu;
    m.var_v += w * cv * cv;
    m.cov += w * cu * cv;
  }
  m.var_u /= m.weight_sum;
  m.var_v /= m.weight_sum;
  m.cov /= m.weight_sum;
  return m;
}

}  // namespace detail

// Slope from regressing child ranks on parent ranks.
inline double rho_ols(std::span<const double> u, std::span<const double> v,
                      std::span<const double> weights = {}) {
  const auto m = detail::rank_moments(u, v, weights);
  if (!(m.var_v > 0.0))
    throw std::invalid_argument("rho_ols: parent ranks have zero variance");
  return m.cov / m.var_v;
}

// Pearson correlation of the rank pairs.
inline double rho_corr(std::span<const double> u, std::span<const double> v,
                       std::span<const double> weights = {}) {
  const auto m = detail::rank_moments(u, v, weights);
  if (!(m.var_u > 0.0) || !(m.var_v > 0.0))
    throw std::invalid_argument("rho_corr: ranks have zero variance");
  return m.cov / std::sqrt(m.var_u * m.var_v);
}

// 12 * weighted mean of (u - 1/2)(v - 1/2). Centers at the known uniform
// mean instead of the sample mean, so it needs no variance precondition.
inline double rho_cov(std::span<const double> u, std::span<const double> v,
                      std::span<const double> weights = {}) {
  const std::size_t n = u.size();
  if (n == 0 || v.size() != n)
    throw std::invalid_argument("rho_cov: need equal-length non-empty rank vectors");
  if (weights.empty()) {
    // Same bitwise-exactness contract as rank_moments.
    const std::vector<double> ones(n, 1.0);
    return rho_cov(u, v, ones);
  }
  if (weights.size() != n)
    throw std::invalid_argument("rho_cov: weights length mismatch");
  double acc = 0.0;
  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights[i];
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("rho_cov: weights must be finite and nonnegative");
    acc += w * (u[i] - 0.5) * (v[i] - 0.5);
    wsum += w;
  }
  if (!(wsum > 0.0)) throw std::invalid_argument("rho_cov: total weight must be positive");
  return 12.0 * acc / wsum;
}

inline double rho_ols(const RankSet& r, std::span<const double> weights = {}) {
  return rho_ols(r.u_hat, r.v_hat, weights);
}
inline double rho_corr(const RankSet& r, std::span<const double> weights = {}) {
  return rho_corr(r.u_hat, r.v_hat, weights);
}
inline double rho_cov(const RankSet& r, std::span<const double> weights = {}) {
  return rho_cov(r.u_hat, r.v_hat, weights);
}

// Converts the slope form to the correlation scale. With both sds taken from
// the same rank vectors this equals rho_corr; it is exposed separately because
// the rescaled value can leave [-1, 1] when sds come from different sources.
inline double spearman_rescale(double rho_ols_value, double sd_u, double sd_v) {
  if (!(sd_u > 0.0) || !(sd_v > 0.0))
    throw std::invalid_argument("spearman_rescale: sds must be positive");
  return rho_ols_value * sd_v / sd_u;
}

// Classic rank-rank slope: marginal (unconditional) ranks of both outcomes,
// then the OLS-slope form. Sample weights, when given, enter both the rank
// construction and the slope moments.
inline double rrr_slope(std::span<const double> child, std::span<const double> parent,
                        double omega, std::span<const double> weights = {}) {
  if (child.size() != parent.size())
    throw std::invalid_argument("rrr_slope: outcome vectors differ in length");
  const auto u = weights.empty() ? marginal_ranks(child, omega)
                                 : weighted_marginal_ranks(child, weights, omega);
  const auto v = weights.empty() ? marginal_ranks(parent, omega)
                                 : weighted_marginal_ranks(parent, weights, omega);
  return rho_ols(u, v, weights);
}

// One estimation run: the three conditional-rank forms, the marginal-rank
// slope, and their difference, plus enough run description to reproduce it.
struct EstimateReport {
  double rho_ols = 0.0;
  double rho_corr = 0.0;
  double rho_cov = 0.0;
  double rrr_slope = 0.0;
  double between_component = 0.0;  // rrr_slope - rho_ols by definition
  std::optional<double> se;
  std::optional<std::pair<double, double>> aci;
  std::uint64_t seed = 0;
  int folds = 0;
  std::optional<double> omega;
  std::optional<int> bootstrap_draws;
  std::string family;
};

// Marginal ranks for the classic slope reuse the conditional-rank omega when
// one is set; continuous runs default to the plain right-closed ECDF.
inline EstimateReport make_report(const RankSet& ranks, std::span<const double> child,
                                  std::span<const double> parent,
                                  std::span<const double> weights = {}) {
  EstimateReport rep;
  rep.rho_ols = rho_ols(ranks, weights);
  rep.rho_corr = rho_corr(ranks, weights);
  rep.rho_cov = rho_cov(ranks, weights);
  rep.rrr_slope = rrr_slope(child, parent, ranks.omega.value_or(1.0), weights);
  rep.between_component = rep.rrr_slope - rep.rho_ols;
  rep.folds = ranks.folds;
  rep.omega = ranks.omega;
  return rep;
}

}  // namespace crrr
