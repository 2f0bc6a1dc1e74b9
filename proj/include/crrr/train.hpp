#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "crrr/mlp.hpp"
#include "crrr/rng.hpp"
#include "crrr/types.hpp"

namespace crrr {

struct TrainConfig {
  std::vector<int> hidden = {64, 64};
  Activation activation = Activation::rectifier;
  double learning_rate = 1e-3;
  int batch_size = 256;
  int max_epochs = 200;
  int patience = 10;
  double validation_fraction = 0.1;
  // Training inputs with at most this many distinct rows take the grouped
  // path: the backbone runs once per distinct row instead of once per sample.
  int group_limit = 64;

  void validate() const {
    if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning_rate must be positive");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be positive");
    if (max_epochs < 1) throw std::invalid_argument("TrainConfig: max_epochs must be positive");
    if (patience < 1) throw std::invalid_argument("TrainConfig: patience must be positive");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
      throw std::invalid_argument("TrainConfig: validation_fraction must lie in [0, 1)");
    }
  }
};

// Optimization failure; carries where it happened and the last usable loss.
struct TrainingDiverged : std::runtime_error {
  TrainingDiverged(int epoch_, double last_loss_)
      : std::runtime_error("training diverged at epoch " + std::to_string(epoch_)),
        epoch(epoch_),
        last_loss(last_loss_) {}
  int epoch;
  double last_loss;
};

struct TrainResult {
  int epochs_run = 0;
  int best_epoch = -1;
  double best_val_loss = std::numeric_limits<double>::infinity();
  double final_train_loss = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> val_loss_history;
};

namespace detail {

class Adam {
 public:
  Adam(Mlp& net, double lr) : net_(net), lr_(lr) {
    mw_ = net.zero_weight_grads();
    vw_ = net.zero_weight_grads();
    mb_ = net.zero_bias_grads();
    vb_ = net.zero_bias_grads();
  }

  void step(const std::vector<Eigen::MatrixXd>& gw, const std::vector<Eigen::VectorXd>& gb) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1, t_);
    const double c2 = 1.0 - std::pow(beta2, t_);
    auto& w = net_.weight_tensors();
    auto& b = net_.bias_tensors();
    for (std::size_t l = 0; l < w.size(); ++l) {
      mw_[l] = beta1 * mw_[l] + (1.0 - beta1) * gw[l];
      vw_[l].array() = beta2 * vw_[l].array() + (1.0 - beta2) * gw[l].array().square();
      w[l].array() -= lr_ * (mw_[l].array() / c1) / ((vw_[l].array() / c2).sqrt() + eps);
      mb_[l] = beta1 * mb_[l] + (1.0 - beta1) * gb[l];
      vb_[l].array() = beta2 * vb_[l].array() + (1.0 - beta2) * gb[l].array().square();
      b[l].array() -= lr_ * (mb_[l].array() / c1) / ((vb_[l].array() / c2).sqrt() + eps);
    }
  }

  static constexpr double beta1 = 0.9;
  static constexpr double beta2 = 0.999;
  static constexpr double eps = 1e-8;

 private:
  Mlp& net_;
  double lr_;
  int t_ = 0;
  std::vector<Eigen::MatrixXd> mw_, vw_;
  std::vector<Eigen::VectorXd> mb_, vb_;
};

// Maps each row of x to a distinct-row id; empty result means "too many".
inline std::vector<int> group_rows(const Mat& x, int limit) {
  std::map<std::vector<double>, int> seen;
  std::vector<int> gid(static_cast<std::size_t>(x.rows()));
  std::vector<double> key(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) key[static_cast<std::size_t>(j)] = x(i, j);
    auto [it, inserted] = seen.emplace(key, static_cast<int>(seen.size()));
    if (inserted && static_cast<int>(seen.size()) > limit) return {};
    gid[static_cast<std::size_t>(i)] = it->second;
  }
  return gid;
}

}  // namespace detail

// Minimizes the weighted mean of adapter losses over (x_i, target_i) pairs.
//
// Adapter contract:
//   double loss_grad(const double* out, std::size_t i, double* grad) const;
// returns the per-sample loss for model output row `out` (length
// net.output_dim()) at sample index i, writing d loss / d out into `grad`
// when grad is non-null. Targets live inside the adapter.
//
// `weights` scales per-sample losses (empty means unit weights; unit weights
// reproduce the unweighted fit bit for bit). Validation rows come out of the
// same sample; early stopping tracks weighted validation loss and the best
// epoch's parameters are restored on exit.
template <class Adapter>
TrainResult train(Mlp& net, const Mat& x, const Adapter& adapter,
                  std::span<const double> weights, const TrainConfig& cfg, RngStream rng) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(x.rows());
  if (n < 2) throw std::invalid_argument("train: need at least two samples");
  if (!weights.empty() && weights.size() != n) {
    throw std::invalid_argument("train: weight length mismatch");
  }
  if (net.empty()) {
    net = Mlp(static_cast<int>(x.cols()), cfg.hidden, adapter.output_dim(), cfg.activation, rng);
  } else if (net.input_dim() != x.cols() || net.output_dim() != adapter.output_dim()) {
    throw std::invalid_argument("train: warm-start net shape mismatch");
  }

  // Deterministic validation split drawn before any optimization.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  const auto n_val = static_cast<std::size_t>(
      std::floor(cfg.validation_fraction * static_cast<double>(n)));
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + n_val);
  std::vector<std::size_t> train_idx(order.begin() + n_val, order.end());
  if (train_idx.empty()) throw std::invalid_argument("train: validation split leaves no data");
  const int batch = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), train_idx.size()));

  const std::vector<int> gid = detail::group_rows(x, cfg.group_limit);
  const bool grouped = !gid.empty();
  Mat unique_x;
  int n_groups = 0;
  if (grouped) {
    n_groups = 1 + *std::max_element(gid.begin(), gid.end());
    unique_x.resize(n_groups, x.cols());
    for (std::size_t i = 0; i < n; ++i) unique_x.row(gid[i]) = x.row(i);
  }

  const int out_dim = adapter.output_dim();
  auto gw = net.zero_weight_grads();
  auto gb = net.zero_bias_grads();
  detail::Adam opt(net, cfg.learning_rate);

  const auto weight_of = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

  // Weighted mean loss over a fixed index set; grouped mode reuses one
  // backbone pass over the distinct rows.
  Mlp::Workspace eval_ws;
  const auto eval_loss = [&](const std::vector<std::size_t>& idx) {
    if (idx.empty()) return std::numeric_limits<double>::quiet_NaN();
    double acc = 0.0, wsum = 0.0;
    if (grouped) {
      const Mat out = net.forward(unique_x);
      for (std::size_t i : idx) {
        const double wi = weight_of(i);
        acc += wi * adapter.loss_grad(out.row(gid[i]).data(), i, nullptr);
        wsum += wi;
      }
    } else {
      Mat xb(idx.size(), x.cols());
      for (std::size_t r = 0; r < idx.size(); ++r) xb.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(idx[r]));
      const Mat out = net.forward(xb);
      for (std::size_t r = 0; r < idx.size(); ++r) {
        const double wi = weight_of(idx[r]);
        acc += wi * adapter.loss_grad(out.row(static_cast<Eigen::Index>(r)).data(), idx[r], nullptr);
        wsum += wi;
      }
    }
    return acc / wsum;
  };

  TrainResult res;
  std::vector<double> best_params;
  double last_finite = std::numeric_limits<double>::quiet_NaN();
  int since_best = 0;
  const bool track_val = !val_idx.empty();

  Mat xb, out, gout;
  Eigen::RowVectorXd grow(out_dim);
  Mlp::Workspace ws;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    rng.shuffle(train_idx);
    double epoch_loss = 0.0, epoch_wsum = 0.0;
    for (std::size_t start = 0; start < train_idx.size(); start += static_cast<std::size_t>(batch)) {
      const std::size_t stop = std::min(train_idx.size(), start + static_cast<std::size_t>(batch));
      const auto bsz = static_cast<Eigen::Index>(stop - start);
      for (auto& g : gw) g.setZero();
      for (auto& g : gb) g.setZero();
      double batch_loss = 0.0;

      if (grouped) {
        out = net.forward(unique_x, &ws);
        gout.setZero(n_groups, out_dim);
        for (std::size_t r = start; r < stop; ++r) {
          const std::size_t i = train_idx[r];
          const double scale = weight_of(i) / static_cast<double>(bsz);
          batch_loss += scale * adapter.loss_grad(out.row(gid[i]).data(), i, grow.data());
          gout.row(gid[i]) += scale * grow;
        }
        net.backward(ws, gout, gw, gb);
      } else {
        xb.resize(bsz, x.cols());
        for (Eigen::Index r = 0; r < bsz; ++r) {
          xb.row(r) = x.row(static_cast<Eigen::Index>(train_idx[start + static_cast<std::size_t>(r)]));
        }
        out = net.forward(xb, &ws);
        gout.resize(bsz, out_dim);
        for (Eigen::Index r = 0; r < bsz; ++r) {
          const std::size_t i = train_idx[start + static_cast<std::size_t>(r)];
          const double scale = weight_of(i) / static_cast<double>(bsz);
          batch_loss += scale * adapter.loss_grad(out.row(r).data(), i, grow.data());
          gout.row(r) = scale * grow;
        }
        net.backward(ws, gout, gw, gb);
      }

      if (!std::isfinite(batch_loss)) throw TrainingDiverged(epoch, last_finite);
      last_finite = batch_loss;
      opt.step(gw, gb);
      epoch_loss += batch_loss * static_cast<double>(bsz);
      epoch_wsum += static_cast<double>(bsz);
    }
    res.final_train_loss = epoch_loss / epoch_wsum;
    res.epochs_run = epoch + 1;

    const double val = track_val ? eval_loss(val_idx) : res.final_train_loss;
    if (!std::isfinite(val)) throw TrainingDiverged(epoch, last_finite);
    res.val_loss_history.push_back(val);
    if (val < res.best_val_loss) {
      res.best_val_loss = val;
      res.best_epoch = epoch;
      best_params = net.get_params();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }

  if (!best_params.empty()) net.set_params(best_params);
  return res;
}

}  // namespace crrr
