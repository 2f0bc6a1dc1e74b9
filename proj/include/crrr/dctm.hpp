#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "crrr/bernstein.hpp"
#include "crrr/dataset.hpp"
#include "crrr/mlp.hpp"
#include "crrr/model.hpp"
#include "crrr/special.hpp"
#include "crrr/stats.hpp"
#include "crrr/train.hpp"

namespace crrr {

inline constexpr double kJacobianFloor = 1e-12;

// Maps an outcome onto the unit interval: u = logistic((r - center)/scale).
// Frozen from the training sample before any optimization.
struct Normalizer {
  double center = 0.0;
  double scale = 1.0;

  static Normalizer fit(std::span<const double> r) {
    std::vector<double> s(r.begin(), r.end());
    std::sort(s.begin(), s.end());
    Normalizer n;
    n.center = empirical_quantile_sorted(s, 0.5);
    n.scale = std::fmax(iqr_sorted(s) / 1.349, 1e-6);
    return n;
  }

  double to_unit(double r) const { return logistic((r - center) / scale); }

  // du/dr evaluated at u = to_unit(r).
  double chain(double u) const { return u * (1.0 - u) / scale; }
};

// Continuous conditional transformation model: F(y|x) = Phi(T(y, x)) with
// T(y, x) = sum_j beta_j(x) B_j(u(y)), where beta_0 = c(x) and increments
// beta_{j} - beta_{j-1} = softplus(d_j(x)) keep T nondecreasing in y. The
// net emits (c, d_1..d_J) from one shared backbone.
class DctmModel final : public ConditionalCdfModel {
 public:
  DctmModel() = default;
  DctmModel(int degree, Normalizer norm, Mlp net)
      : degree_(degree), norm_(norm), net_(std::move(net)) {
    if (degree < 1) throw std::invalid_argument("DctmModel: degree must be >= 1");
    if (net_.output_dim() != degree + 1) {
      throw std::invalid_argument("DctmModel: net output width must be degree + 1");
    }
  }

  int degree() const { return degree_; }
  const Normalizer& normalizer() const { return norm_; }
  const Mlp& net() const { return net_; }
  Mlp& net() { return net_; }

  // Nondecreasing coefficient vector beta(x), length degree + 1.
  Eigen::VectorXd coefficients(std::span<const double> x) const {
    const Eigen::VectorXd out = forward_one(x);
    Eigen::VectorXd beta(degree_ + 1);
    beta[0] = out[0];
    for (int j = 1; j <= degree_; ++j) beta[j] = beta[j - 1] + softplus(out[j]);
    return beta;
  }

  double transform(double y, std::span<const double> x) const {
    const Eigen::VectorXd beta = coefficients(x);
    std::vector<double> basis(static_cast<std::size_t>(degree_) + 1);
    bernstein_basis(norm_.to_unit(y), degree_, basis.data());
    double t = 0.0;
    for (int j = 0; j <= degree_; ++j) t += beta[j] * basis[static_cast<std::size_t>(j)];
    return t;
  }

  // dT/dy; nonnegative by construction.
  double transform_slope(double y, std::span<const double> x) const {
    const Eigen::VectorXd beta = coefficients(x);
    const double u = norm_.to_unit(y);
    std::vector<double> dbasis(static_cast<std::size_t>(degree_));
    bernstein_basis(u, degree_ - 1, dbasis.data());
    double s = 0.0;
    for (int k = 0; k < degree_; ++k) {
      s += (beta[k + 1] - beta[k]) * dbasis[static_cast<std::size_t>(k)];
    }
    return degree_ * s * norm_.chain(u);
  }

  double cdf(double y, std::span<const double> x) const override {
    return std::clamp(std_normal_cdf(transform(y, x)), kCdfClamp, 1.0 - kCdfClamp);
  }

  double cdf_left(double y, std::span<const double> x) const override { return cdf(y, x); }

  double log_density(double y, std::span<const double> x) const {
    const double t = transform(y, x);
    const double slope = std::fmax(transform_slope(y, x), kJacobianFloor);
    return -0.5 * std::numbers::ln2 - 0.5 * std::log(std::numbers::pi) - 0.5 * t * t +
           std::log(slope);
  }

 private:
  Eigen::VectorXd forward_one(std::span<const double> x) const {
    Eigen::Map<const Eigen::RowVectorXd> row(x.data(), static_cast<Eigen::Index>(x.size()));
    Mat xb(1, row.size());
    xb.row(0) = row;
    return net_.forward(xb).row(0).transpose();
  }

  int degree_ = 0;
  Normalizer norm_;
  Mlp net_;
};

// Per-sample negative log likelihood of the transformation model. Bernstein
// rows are fixed by the data, so they are evaluated once up front.
class DctmLoss {
 public:
  DctmLoss(std::span<const double> y, const Normalizer& norm, int degree)
      : degree_(degree), basis_(y.size(), degree + 1), dbasis_(y.size(), degree) {
    if (degree < 1) throw std::invalid_argument("DctmLoss: degree must be >= 1");
    chain_.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double u = norm.to_unit(y[i]);
      bernstein_basis(u, degree, basis_.row(static_cast<Eigen::Index>(i)).data());
      bernstein_basis(u, degree - 1, dbasis_.row(static_cast<Eigen::Index>(i)).data());
      chain_[i] = norm.chain(u);
    }
  }

  int output_dim() const { return degree_ + 1; }

  long floored_count() const { return floored_; }

  // out: (c, d_1..d_J). Returns the NLL contribution; fills grad with
  // d loss / d out when grad is non-null.
  double loss_grad(const double* out, std::size_t i, double* grad) const {
    const double* b = basis_.row(static_cast<Eigen::Index>(i)).data();
    const double* db = dbasis_.row(static_cast<Eigen::Index>(i)).data();
    const int J = degree_;

    // T = c + sum_k sp_k * S_k with S_k the basis tail sums; the increments
    // sp_k = softplus(out[k]) also give dT/du via the degree-(J-1) basis.
    double t = out[0];
    double slope = 0.0;
    double tail = 0.0;
    // Tail sums built from the top; accumulate T and slope in one pass.
    static thread_local std::vector<double> sp, tails;
    sp.assign(static_cast<std::size_t>(J) + 1, 0.0);
    tails.assign(static_cast<std::size_t>(J) + 1, 0.0);
    for (int k = J; k >= 1; --k) {
      tail += b[k];
      tails[static_cast<std::size_t>(k)] = tail;
      sp[static_cast<std::size_t>(k)] = softplus(out[k]);
      t += sp[static_cast<std::size_t>(k)] * tail;
      slope += sp[static_cast<std::size_t>(k)] * db[k - 1];
    }
    const double dtdy = static_cast<double>(J) * slope * chain_[i];
    const bool floored = dtdy <= kJacobianFloor;
    if (floored) ++floored_;
    const double safe = std::fmax(dtdy, kJacobianFloor);

    constexpr double half_log_2pi = 0.9189385332046727;
    const double loss = half_log_2pi + 0.5 * t * t - std::log(safe);
    if (grad) {
      grad[0] = t;
      for (int k = 1; k <= J; ++k) {
        double g = t * tails[static_cast<std::size_t>(k)];
        if (!floored) {
          g -= (static_cast<double>(J) * db[k - 1] * chain_[i]) / dtdy;
        }
        grad[k] = g * logistic(out[k]);
      }
    }
    return loss;
  }

 private:
  int degree_;
  Mat basis_;
  Mat dbasis_;
  std::vector<double> chain_;
  mutable long floored_ = 0;
};

struct DctmFitConfig {
  int degree = 32;
  TrainConfig train;
};

struct DctmFit {
  DctmModel model;
  TrainResult train;
  long floored_jacobians = 0;
};

// Fits the transformation model to outcome r given covariates x. When warm
// is provided its normalizer and parameters seed the fit (used by weighted
// bootstrap refits); otherwise the normalizer comes from this sample.
inline DctmFit fit_dctm(std::span<const double> r, const Mat& x, const DctmFitConfig& cfg,
                        RngStream rng, std::span<const double> weights = {},
                        const DctmModel* warm = nullptr) {
  if (static_cast<Eigen::Index>(r.size()) != x.rows()) {
    throw std::invalid_argument("fit_dctm: outcome/covariate length mismatch");
  }
  const Normalizer norm = warm ? warm->normalizer() : Normalizer::fit(r);
  const DctmLoss loss(r, norm, cfg.degree);
  Mlp net;
  if (warm) {
    if (warm->degree() != cfg.degree) throw std::invalid_argument("fit_dctm: warm degree mismatch");
    net = warm->net();
  }
  DctmFit fit;
  fit.train = train(net, x, loss, weights, cfg.train, rng);
  fit.floored_jacobians = loss.floored_count();
  fit.model = DctmModel(cfg.degree, norm, std::move(net));
  return fit;
}

}  // namespace crrr
