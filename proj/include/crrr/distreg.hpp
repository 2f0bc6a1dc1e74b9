#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "crrr/model.hpp"
#include "crrr/special.hpp"
#include "crrr/stats.hpp"
#include "crrr/types.hpp"

namespace crrr {

inline constexpr double kLogitRidge = 1e-8;
inline constexpr double kLogitTol = 1e-8;
inline constexpr int kLogitMaxIter = 100;
// Constant-probability fallback for degenerate threshold fits.
inline constexpr double kDegenerateClip = 1e-6;

// One binary regression: coef = (intercept, slopes). Degenerate fits (labels
// all equal, or a numerically failed solve) fall back to a clipped constant.
struct LogitFit {
  Eigen::VectorXd coef;
  bool degenerate = false;
  double fallback = 0.5;
  bool converged = false;
  int iterations = 0;

  double link(std::span<const double> x) const {
    if (degenerate) return logit(fallback);
    double eta = coef[0];
    for (std::size_t j = 0; j < x.size(); ++j) eta += coef[static_cast<Eigen::Index>(j) + 1] * x[j];
    return eta;
  }

  double probability(std::span<const double> x) const { return logistic(link(x)); }
};

namespace detail {

// Weighted logistic regression by iteratively reweighted least squares on a
// prebuilt design matrix (intercept column included). A small ridge keeps
// the normal equations solvable under separation.
inline LogitFit irls(const Mat& design, std::span<const double> labels,
                     std::span<const double> weights, const Eigen::VectorXd* warm = nullptr) {
  const auto n = static_cast<std::size_t>(design.rows());
  const Eigen::Index d = design.cols();
  const auto weight_of = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

  LogitFit fit;
  double wsum = 0.0, zsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    wsum += weight_of(i);
    zsum += weight_of(i) * labels[i];
  }
  if (wsum <= 0.0) throw std::invalid_argument("irls: nonpositive total weight");
  const double zbar = zsum / wsum;
  if (zbar <= 0.0 || zbar >= 1.0) {
    fit.degenerate = true;
    fit.fallback = std::clamp(zbar, kDegenerateClip, 1.0 - kDegenerateClip);
    fit.coef = Eigen::VectorXd::Zero(d);
    return fit;
  }

  Eigen::VectorXd beta = warm ? *warm : Eigen::VectorXd::Zero(d);
  Eigen::VectorXd eta(static_cast<Eigen::Index>(n));
  Eigen::MatrixXd xtsx(d, d);
  Eigen::VectorXd xtsz(d);
  for (int iter = 0; iter < kLogitMaxIter; ++iter) {
    eta.noalias() = design * beta;
    xtsx.setZero();
    xtsz.setZero();
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double mu = std::clamp(logistic(eta[r]), 1e-10, 1.0 - 1e-10);
      const double s = weight_of(i) * mu * (1.0 - mu);
      const double zwork = eta[r] + (labels[i] - mu) / (mu * (1.0 - mu));
      xtsx.selfadjointView<Eigen::Lower>().rankUpdate(design.row(r).transpose(), s);
      xtsz.noalias() += (s * zwork) * design.row(r).transpose();
    }
    xtsx.diagonal().array() += kLogitRidge;
    const Eigen::VectorXd next = xtsx.selfadjointView<Eigen::Lower>().ldlt().solve(xtsz);
    if (!next.allFinite()) {
      fit.degenerate = true;
      fit.fallback = std::clamp(zbar, kDegenerateClip, 1.0 - kDegenerateClip);
      fit.coef = Eigen::VectorXd::Zero(d);
      return fit;
    }
    const double step = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    fit.iterations = iter + 1;
    if (step < kLogitTol) {
      fit.converged = true;
      break;
    }
  }
  fit.coef = std::move(beta);
  return fit;
}

inline Mat with_intercept(const Mat& x) {
  Mat design(x.rows(), x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;
  return design;
}

}  // namespace detail

// Binary labels in {0,1} against covariate rows x.
inline LogitFit fit_logit(std::span<const double> labels, const Mat& x,
                          std::span<const double> weights = {}) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows()) {
    throw std::invalid_argument("fit_logit: label/covariate length mismatch");
  }
  if (!weights.empty() && weights.size() != labels.size()) {
    throw std::invalid_argument("fit_logit: weight length mismatch");
  }
  if (x.rows() < x.cols() + 2) throw std::invalid_argument("fit_logit: need n >= p + 2");
  for (double z : labels) {
    if (z != 0.0 && z != 1.0) throw std::invalid_argument("fit_logit: labels must be 0 or 1");
  }
  return detail::irls(detail::with_intercept(x), labels, weights);
}

// Conditional CDF from per-threshold binary fits. Evaluation enforces
// monotonicity by a running maximum over thresholds, interpolates linearly
// in y between them, and extrapolates outside the grid on the link scale
// with the slope of the nearest interior link gap.
class DrContinuousModel final : public ConditionalCdfModel {
 public:
  DrContinuousModel() = default;
  DrContinuousModel(std::vector<double> thresholds, std::vector<LogitFit> fits)
      : thresholds_(std::move(thresholds)), fits_(std::move(fits)) {
    if (thresholds_.empty()) throw std::invalid_argument("DrContinuousModel: empty grid");
    if (thresholds_.size() != fits_.size()) {
      throw std::invalid_argument("DrContinuousModel: grid/fit size mismatch");
    }
    for (std::size_t m = 1; m < thresholds_.size(); ++m) {
      if (!(thresholds_[m - 1] < thresholds_[m])) {
        throw std::invalid_argument("DrContinuousModel: thresholds must be strictly ascending");
      }
    }
  }

  const std::vector<double>& thresholds() const { return thresholds_; }
  const std::vector<LogitFit>& fits() const { return fits_; }

  double cdf(double y, std::span<const double> x) const override {
    const std::size_t m_count = thresholds_.size();
    thread_local std::vector<double> q;
    q.resize(m_count);
    double run = 0.0;
    for (std::size_t m = 0; m < m_count; ++m) {
      run = std::max(run, fits_[m].probability(x));
      q[m] = run;
    }
    double value;
    if (y <= thresholds_.front()) {
      value = (y == thresholds_.front()) ? q.front()
                                         : extrapolate_below(y, q);
    } else if (y >= thresholds_.back()) {
      value = (y == thresholds_.back()) ? q.back()
                                        : extrapolate_above(y, q);
    } else {
      const auto hi = static_cast<std::size_t>(
          std::upper_bound(thresholds_.begin(), thresholds_.end(), y) - thresholds_.begin());
      const std::size_t lo = hi - 1;
      const double t = (y - thresholds_[lo]) / (thresholds_[hi] - thresholds_[lo]);
      value = q[lo] + t * (q[hi] - q[lo]);
    }
    return std::clamp(value, kCdfClamp, 1.0 - kCdfClamp);
  }

  double cdf_left(double y, std::span<const double> x) const override { return cdf(y, x); }

 private:
  static double clamped_logit(double p) { return logit(std::clamp(p, kCdfClamp, 1.0 - kCdfClamp)); }

  // Link-scale slope of the first or last grid gap; a degenerate one-point
  // grid falls back to unit slope, which keeps the tails monotone.
  double edge_slope(const std::vector<double>& q, bool below) const {
    if (thresholds_.size() < 2) return 1.0;
    const std::size_t a = below ? 0 : thresholds_.size() - 2;
    return (clamped_logit(q[a + 1]) - clamped_logit(q[a])) / (thresholds_[a + 1] - thresholds_[a]);
  }

  double extrapolate_below(double y, const std::vector<double>& q) const {
    const double eta = clamped_logit(q.front()) + (y - thresholds_.front()) * edge_slope(q, true);
    return logistic(eta);
  }

  double extrapolate_above(double y, const std::vector<double>& q) const {
    const double eta = clamped_logit(q.back()) + (y - thresholds_.back()) * edge_slope(q, false);
    return logistic(eta);
  }

  std::vector<double> thresholds_;
  std::vector<LogitFit> fits_;
};

struct DrContinuousFit {
  DrContinuousModel model;
  int requested_thresholds = 0;
  int effective_thresholds = 0;
  // Set when n < 10 * requested thresholds; callers decide how to surface it.
  bool small_sample = false;
};

// Probability grid covering [0.01, 0.99] uniformly with m points.
inline std::vector<double> dr_probability_grid(int m) {
  if (m < 1) throw std::invalid_argument("dr_probability_grid: need m >= 1");
  if (m == 1) return {0.5};
  std::vector<double> p(static_cast<std::size_t>(m));
  const double step = 0.98 / static_cast<double>(m - 1);
  for (int j = 0; j < m; ++j) {
    p[static_cast<std::size_t>(j)] = (j == m - 1) ? 0.99 : 0.01 + step * static_cast<double>(j);
  }
  return p;
}

// Threshold-by-threshold fit of P(r <= t | x) at empirical quantiles of r.
// Duplicate quantiles (few distinct outcome values) collapse to one
// threshold; warm, when given, seeds each threshold fit with the previous
// model's coefficients for cheap reweighted refits.
inline DrContinuousFit fit_dr_continuous(std::span<const double> r, const Mat& x, int m_thresholds,
                                         std::span<const double> weights = {},
                                         const DrContinuousModel* warm = nullptr) {
  if (static_cast<Eigen::Index>(r.size()) != x.rows()) {
    throw std::invalid_argument("fit_dr_continuous: outcome/covariate length mismatch");
  }
  if (!weights.empty() && weights.size() != r.size()) {
    throw std::invalid_argument("fit_dr_continuous: weight length mismatch");
  }
  if (m_thresholds < 1) throw std::invalid_argument("fit_dr_continuous: need at least one threshold");
  if (x.rows() < x.cols() + 2) throw std::invalid_argument("fit_dr_continuous: need n >= p + 2");

  std::vector<double> sorted(r.begin(), r.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> thresholds;
  thresholds.reserve(static_cast<std::size_t>(m_thresholds));
  for (double p : dr_probability_grid(m_thresholds)) {
    const double t = empirical_quantile_sorted(sorted, p);
    if (thresholds.empty() || t > thresholds.back()) thresholds.push_back(t);
  }

  const Mat design = detail::with_intercept(x);
  std::vector<double> labels(r.size());
  std::vector<LogitFit> fits;
  fits.reserve(thresholds.size());
  const bool can_warm = warm && warm->thresholds().size() == thresholds.size();
  for (std::size_t m = 0; m < thresholds.size(); ++m) {
    for (std::size_t i = 0; i < r.size(); ++i) labels[i] = r[i] <= thresholds[m] ? 1.0 : 0.0;
    const Eigen::VectorXd* seed = nullptr;
    if (can_warm && !warm->fits()[m].degenerate) seed = &warm->fits()[m].coef;
    fits.push_back(detail::irls(design, labels, weights, seed));
  }

  DrContinuousFit out;
  out.requested_thresholds = m_thresholds;
  out.effective_thresholds = static_cast<int>(thresholds.size());
  out.small_sample = static_cast<std::size_t>(x.rows()) <
                     10 * static_cast<std::size_t>(m_thresholds);
  out.model = DrContinuousModel(std::move(thresholds), std::move(fits));
  return out;
}

// Ordinal counterpart: one binary fit per category boundary, monotonized
// across categories at evaluation time; the top category closes at one.
class DrDiscreteModel final : public ConditionalCdfModel {
 public:
  DrDiscreteModel() = default;
  DrDiscreteModel(int categories, std::vector<LogitFit> fits)
      : categories_(categories), fits_(std::move(fits)) {
    if (categories < 2) throw std::invalid_argument("DrDiscreteModel: need >= 2 categories");
    if (fits_.size() + 1 != static_cast<std::size_t>(categories)) {
      throw std::invalid_argument("DrDiscreteModel: need K - 1 fits");
    }
  }

  int categories() const { return categories_; }
  const std::vector<LogitFit>& fits() const { return fits_; }

  // F(0|x) .. F(K-1|x); nondecreasing, last entry exactly one.
  Eigen::VectorXd cdf_vector(std::span<const double> x) const {
    Eigen::VectorXd f(categories_);
    double run = 0.0;
    for (int k = 0; k + 1 < categories_; ++k) {
      run = std::max(run, fits_[static_cast<std::size_t>(k)].probability(x));
      f[k] = std::min(run, 1.0);
    }
    f[categories_ - 1] = 1.0;
    return f;
  }

  Eigen::VectorXd pmf_vector(std::span<const double> x) const {
    const Eigen::VectorXd f = cdf_vector(x);
    Eigen::VectorXd p(categories_);
    p[0] = f[0];
    for (int k = 1; k < categories_; ++k) p[k] = f[k] - f[k - 1];
    return p;
  }

  double cdf(double r, std::span<const double> x) const override {
    const int k = static_cast<int>(std::floor(r));
    if (k < 0) return 0.0;
    if (k >= categories_ - 1) return 1.0;
    return cdf_vector(x)[k];
  }

  double cdf_left(double r, std::span<const double> x) const override {
    const int k = static_cast<int>(std::floor(r));
    if (k <= 0) return 0.0;
    if (k >= categories_) return 1.0;
    return cdf_vector(x)[k - 1];
  }

 private:
  int categories_ = 0;
  std::vector<LogitFit> fits_;
};

struct DrDiscreteFit {
  DrDiscreteModel model;
};

inline DrDiscreteFit fit_dr_discrete(std::span<const double> labels, const Mat& x, int categories,
                                     std::span<const double> weights = {},
                                     const DrDiscreteModel* warm = nullptr) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows()) {
    throw std::invalid_argument("fit_dr_discrete: label/covariate length mismatch");
  }
  if (!weights.empty() && weights.size() != labels.size()) {
    throw std::invalid_argument("fit_dr_discrete: weight length mismatch");
  }
  if (categories < 2) throw std::invalid_argument("fit_dr_discrete: need >= 2 categories");
  if (x.rows() < x.cols() + 2) throw std::invalid_argument("fit_dr_discrete: need n >= p + 2");
  for (double v : labels) {
    if (v != std::floor(v) || v < 0.0 || v >= static_cast<double>(categories)) {
      throw std::invalid_argument("fit_dr_discrete: label outside {0..K-1}");
    }
  }

  const Mat design = detail::with_intercept(x);
  std::vector<double> binary(labels.size());
  std::vector<LogitFit> fits;
  fits.reserve(static_cast<std::size_t>(categories) - 1);
  const bool can_warm = warm && warm->categories() == categories;
  for (int k = 0; k + 1 < categories; ++k) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      binary[i] = labels[i] <= static_cast<double>(k) ? 1.0 : 0.0;
    }
    const Eigen::VectorXd* seed = nullptr;
    if (can_warm && !warm->fits()[static_cast<std::size_t>(k)].degenerate) {
      seed = &warm->fits()[static_cast<std::size_t>(k)].coef;
    }
    fits.push_back(detail::irls(design, binary, weights, seed));
  }
  return DrDiscreteFit{DrDiscreteModel(categories, std::move(fits))};
}

}  // namespace crrr
