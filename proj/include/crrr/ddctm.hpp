#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "crrr/dataset.hpp"
#include "crrr/mlp.hpp"
#include "crrr/model.hpp"
#include "crrr/special.hpp"
#include "crrr/train.hpp"

namespace crrr {

inline constexpr double kPmfFloor = 1e-12;

// Ordinal conditional model with K categories coded 0..K-1. Monotone scores
// s_k(x) = c(x) + sum_{j<=k} softplus(d_j(x)) give F(k|x) = logistic(s_k)
// for k < K-1 and F(K-1|x) = 1; category probabilities follow by
// differencing. Inputs are covariates only.
class DdctmModel final : public ConditionalCdfModel {
 public:
  DdctmModel() = default;
  DdctmModel(int categories, Mlp net) : categories_(categories), net_(std::move(net)) {
    if (categories < 2) throw std::invalid_argument("DdctmModel: need >= 2 categories");
    if (net_.output_dim() != categories) {
      throw std::invalid_argument("DdctmModel: net output width must equal K");
    }
  }

  int categories() const { return categories_; }
  const Mlp& net() const { return net_; }
  Mlp& net() { return net_; }

  // F(0|x) .. F(K-1|x); nondecreasing, last entry exactly one.
  Eigen::VectorXd cdf_vector(std::span<const double> x) const {
    const Eigen::VectorXd out = forward_one(x);
    Eigen::VectorXd f(categories_);
    double s = out[0];
    for (int k = 0; k + 1 < categories_; ++k) {
      s += softplus(out[k + 1]);
      f[k] = logistic(s);
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
  Eigen::VectorXd forward_one(std::span<const double> x) const {
    Eigen::Map<const Eigen::RowVectorXd> row(x.data(), static_cast<Eigen::Index>(x.size()));
    Mat xb(1, row.size());
    xb.row(0) = row;
    return net_.forward(xb).row(0).transpose();
  }

  int categories_ = 0;
  Mlp net_;
};

// Inverse-frequency class weights, normalized so the sample mean is one.
// Categories absent from the sample get weight zero.
inline std::vector<double> inverse_frequency_weights(std::span<const double> labels, int categories) {
  std::vector<double> count(static_cast<std::size_t>(categories), 0.0);
  for (double r : labels) {
    const int k = static_cast<int>(r);
    if (k < 0 || k >= categories) throw std::invalid_argument("inverse_frequency_weights: label out of range");
    count[static_cast<std::size_t>(k)] += 1.0;
  }
  int present = 0;
  for (double c : count) present += (c > 0.0);
  std::vector<double> w(static_cast<std::size_t>(categories), 0.0);
  const double scale = static_cast<double>(labels.size()) / static_cast<double>(present);
  for (int k = 0; k < categories; ++k) {
    if (count[static_cast<std::size_t>(k)] > 0.0) {
      w[static_cast<std::size_t>(k)] = scale / count[static_cast<std::size_t>(k)];
    }
  }
  return w;
}

// Weighted NLL of the ordinal model. Optional per-category weights multiply
// per-sample losses (bootstrap weights compose on top inside train()).
class DdctmLoss {
 public:
  DdctmLoss(std::span<const double> labels, int categories, std::vector<double> class_weights = {})
      : categories_(categories), cw_(std::move(class_weights)) {
    if (categories < 2) throw std::invalid_argument("DdctmLoss: need >= 2 categories");
    if (!cw_.empty() && cw_.size() != static_cast<std::size_t>(categories)) {
      throw std::invalid_argument("DdctmLoss: class weight length mismatch");
    }
    k_.reserve(labels.size());
    for (double r : labels) {
      const int k = static_cast<int>(r);
      if (k < 0 || k >= categories || r != std::floor(r)) {
        throw std::invalid_argument("DdctmLoss: label outside {0..K-1}");
      }
      k_.push_back(k);
    }
  }

  int output_dim() const { return categories_; }

  long floored_count() const { return floored_; }

  double loss_grad(const double* out, std::size_t i, double* grad) const {
    const int K = categories_;
    const int t = k_[i];
    const double cw = cw_.empty() ? 1.0 : cw_[static_cast<std::size_t>(t)];

    // Scores for the two neighbouring cdf levels F_{t-1}, F_t.
    double s = out[0];
    double f_lo = 0.0, f_hi = 1.0;
    double fp_lo = 0.0, fp_hi = 0.0;  // logistic slopes at the two levels
    for (int k = 0; k + 1 < K; ++k) {
      s += softplus(out[k + 1]);
      if (k == t - 1) {
        f_lo = logistic(s);
        fp_lo = f_lo * (1.0 - f_lo);
      }
      if (k == t) {
        f_hi = logistic(s);
        fp_hi = f_hi * (1.0 - f_hi);
      }
    }
    const double p = f_hi - f_lo;
    const bool floored = p <= kPmfFloor;
    if (floored) ++floored_;
    const double safe = std::fmax(p, kPmfFloor);
    const double loss = -cw * std::log(safe);

    if (grad) {
      std::fill(grad, grad + K, 0.0);
      if (!floored) {
        const double dldp = -cw / p;
        // contributions through F_t (k = t) and F_{t-1} (k = t - 1)
        const double c_hi = (t <= K - 2) ? dldp * fp_hi : 0.0;
        const double c_lo = (t >= 1) ? -dldp * fp_lo : 0.0;
        grad[0] = c_hi + c_lo;
        // d s_k / d out[m+1] = logistic'(..) chain: out[m+1] feeds all k >= m.
        for (int m = 0; m + 1 < K; ++m) {
          double tail = 0.0;
          if (t - 1 >= m) tail += c_lo;
          if (t >= m && t <= K - 2) tail += c_hi;
          if (tail != 0.0) grad[m + 1] = tail * logistic(out[m + 1]);
        }
      }
    }
    return loss;
  }

 private:
  int categories_;
  std::vector<int> k_;
  std::vector<double> cw_;
  mutable long floored_ = 0;
};

struct DdctmFitConfig {
  int categories = 0;
  bool class_weights = false;
  TrainConfig train;
};

struct DdctmFit {
  DdctmModel model;
  TrainResult train;
  long floored_pmfs = 0;
};

inline DdctmFit fit_ddctm(std::span<const double> labels, const Mat& x, const DdctmFitConfig& cfg,
                          RngStream rng, std::span<const double> weights = {},
                          const DdctmModel* warm = nullptr) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows()) {
    throw std::invalid_argument("fit_ddctm: outcome/covariate length mismatch");
  }
  std::vector<double> cw;
  if (cfg.class_weights) cw = inverse_frequency_weights(labels, cfg.categories);
  const DdctmLoss loss(labels, cfg.categories, std::move(cw));
  Mlp net;
  if (warm) {
    if (warm->categories() != cfg.categories) {
      throw std::invalid_argument("fit_ddctm: warm category mismatch");
    }
    net = warm->net();
  }
  DdctmFit fit;
  fit.train = train(net, x, loss, weights, cfg.train, rng);
  fit.floored_pmfs = loss.floored_count();
  fit.model = DdctmModel(cfg.categories, std::move(net));
  return fit;
}

}  // namespace crrr
