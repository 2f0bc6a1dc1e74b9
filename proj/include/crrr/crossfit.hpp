#pragma once

// Cross-fitting: split the sample into K folds, fit child- and parent-outcome
// models on each fold's complement, and score every observation with the
// models that never saw it. The resulting out-of-fold conditional ranks feed
// the rank-rank estimators.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "crrr/dataset.hpp"
#include "crrr/dctm.hpp"
#include "crrr/ddctm.hpp"
#include "crrr/distreg.hpp"
#include "crrr/estimators.hpp"
#include "crrr/ranks.hpp"
#include "crrr/rng.hpp"

namespace crrr {

struct FoldPlan {
  int folds = 0;
  std::vector<int> assignment;  // fold index per observation, in [0, folds)

  std::vector<std::size_t> members(int k) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      if (assignment[i] == k) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> complement(int k) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      if (assignment[i] != k) out.push_back(i);
    return out;
  }
};

// Shuffle the indices, then deal them round-robin so fold sizes differ by at
// most one. Depends only on the stream passed in.
inline FoldPlan make_fold_plan(std::size_t n, int folds, RngStream rng) {
  if (folds < 2) throw std::invalid_argument("make_fold_plan: need at least 2 folds");
  if (n < static_cast<std::size_t>(folds))
    throw std::invalid_argument("make_fold_plan: fewer observations than folds");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  FoldPlan plan;
  plan.folds = folds;
  plan.assignment.assign(n, -1);
  for (std::size_t pos = 0; pos < n; ++pos)
    plan.assignment[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(folds));
  return plan;
}

enum class ModelFamily { dctm, ddctm, dr };

inline const char* family_name(ModelFamily f) {
  switch (f) {
    case ModelFamily::dctm: return "dctm";
    case ModelFamily::ddctm: return "ddctm";
    case ModelFamily::dr: return "dr";
  }
  return "?";
}

inline ModelFamily parse_family(const std::string& s) {
  if (s == "dctm") return ModelFamily::dctm;
  if (s == "ddctm") return ModelFamily::ddctm;
  if (s == "dr") return ModelFamily::dr;
  throw std::invalid_argument("unknown model family: " + s);
}

struct CrossfitConfig {
  ModelFamily family = ModelFamily::dctm;
  int folds = 3;
  double omega = 0.5;  // used only when an outcome is ordinal
  std::uint64_t seed = 1;
  int degree = 32;          // Bernstein degree for the continuous network model
  int dr_thresholds = 32;   // grid size for the continuous regression baseline
  bool class_weights = false;
  TrainConfig train;
};

// One fitted conditional-CDF model; the alternative chosen depends on the
// family and on the outcome being continuous or ordinal.
using FittedModel = std::variant<DctmModel, DdctmModel, DrContinuousModel, DrDiscreteModel>;

inline const ConditionalCdfModel& as_cdf(const FittedModel& m) {
  return *std::visit([](const auto& alt) { return static_cast<const ConditionalCdfModel*>(&alt); },
                     m);
}

struct CrossfitResult {
  RankSet ranks;
  FoldPlan plan;
  std::vector<FittedModel> y_models;  // one per fold
  std::vector<FittedModel> w_models;
};

namespace detail {

struct OutcomeView {
  const Eigen::VectorXd& values;
  const OutcomeSpec& spec;
};

inline void check_family(ModelFamily family, const Dataset& data) {
  const bool any_ordinal = data.y_spec.ordinal() || data.w_spec.ordinal();
  const bool any_continuous = !data.y_spec.ordinal() || !data.w_spec.ordinal();
  if (family == ModelFamily::dctm && any_ordinal)
    throw std::invalid_argument("crossfit: family dctm needs continuous outcomes (use ddctm or dr)");
  if (family == ModelFamily::ddctm && any_continuous)
    throw std::invalid_argument("crossfit: family ddctm needs ordinal outcomes (use dctm or dr)");
}

inline FittedModel fit_outcome(const OutcomeView& oc, const Mat& x_fit,
                               std::span<const double> r_fit, std::span<const double> wts,
                               const CrossfitConfig& cfg, RngStream rng,
                               const FittedModel* warm) {
  if (oc.spec.ordinal()) {
    if (cfg.family == ModelFamily::dr) {
      const auto* seed = warm ? std::get_if<DrDiscreteModel>(warm) : nullptr;
      return fit_dr_discrete(r_fit, x_fit, oc.spec.categories, wts, seed).model;
    }
    DdctmFitConfig fc;
    fc.categories = oc.spec.categories;
    fc.class_weights = cfg.class_weights;
    fc.train = cfg.train;
    const auto* seed = warm ? std::get_if<DdctmModel>(warm) : nullptr;
    return fit_ddctm(r_fit, x_fit, fc, rng, wts, seed).model;
  }
  if (cfg.family == ModelFamily::dr) {
    const auto* seed = warm ? std::get_if<DrContinuousModel>(warm) : nullptr;
    return fit_dr_continuous(r_fit, x_fit, cfg.dr_thresholds, wts, seed).model;
  }
  DctmFitConfig fc;
  fc.degree = cfg.degree;
  fc.train = cfg.train;
  const auto* seed = warm ? std::get_if<DctmModel>(warm) : nullptr;
  return fit_dctm(r_fit, x_fit, fc, rng, wts, seed).model;
}

}  // namespace detail

// Fits each fold's models on the fold complement and scores the fold. The
// optional sample weights flow into every likelihood (bootstrap draws); warm,
// when given, must come from the same data and config, supplies the reused
// fold plan, and seeds each refit from the matching fold's parameters. An
// explicit plan overrides both the seed-derived split and the warm plan,
// which lets cold bootstrap refits keep the main fit's fold assignment.
inline CrossfitResult crossfit_ranks(const Dataset& data, const CrossfitConfig& cfg,
                                     std::span<const double> weights = {},
                                     const CrossfitResult* warm = nullptr,
                                     const FoldPlan* fixed_plan = nullptr) {
  data.validate();
  detail::check_family(cfg.family, data);
  const std::size_t n = static_cast<std::size_t>(data.n());
  if (!weights.empty() && weights.size() != n)
    throw std::invalid_argument("crossfit: weight length mismatch");
  if (!(cfg.omega >= 0.0 && cfg.omega <= 1.0))
    throw std::invalid_argument("crossfit: omega outside [0,1]");
  if (fixed_plan && fixed_plan->assignment.size() != n)
    throw std::invalid_argument("crossfit: fixed plan does not match data size");

  RngStream root(cfg.seed);
  FoldPlan plan = fixed_plan ? *fixed_plan
                             : (warm ? warm->plan : make_fold_plan(n, cfg.folds, root.sub(0)));
  if (warm && (warm->y_models.size() != static_cast<std::size_t>(plan.folds) ||
               warm->w_models.size() != static_cast<std::size_t>(plan.folds)))
    throw std::invalid_argument("crossfit: warm result has wrong fold count");

  CrossfitResult res;
  res.plan = plan;
  res.ranks.u_hat.assign(n, 0.0);
  res.ranks.v_hat.assign(n, 0.0);
  res.ranks.fold = plan.assignment;
  res.ranks.folds = plan.folds;
  if (data.y_spec.ordinal() || data.w_spec.ordinal()) res.ranks.omega = cfg.omega;

  const detail::OutcomeView y_view{data.y, data.y_spec};
  const detail::OutcomeView w_view{data.w, data.w_spec};

  for (int k = 0; k < plan.folds; ++k) {
    const auto fit_idx = plan.complement(k);
    const auto eval_idx = plan.members(k);
    const std::size_t m = fit_idx.size();
    if (m < 4) throw std::runtime_error("crossfit: fold " + std::to_string(k) +
                                        " leaves too few observations to train on");

    Mat x_fit(m, data.p());
    std::vector<double> y_fit(m), w_fit(m), wt_fit;
    if (!weights.empty()) wt_fit.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t i = fit_idx[j];
      x_fit.row(j) = data.x.row(static_cast<Eigen::Index>(i));
      y_fit[j] = data.y[static_cast<Eigen::Index>(i)];
      w_fit[j] = data.w[static_cast<Eigen::Index>(i)];
      if (!weights.empty()) wt_fit[j] = weights[i];
    }

    try {
      res.y_models.push_back(detail::fit_outcome(
          y_view, x_fit, y_fit, wt_fit, cfg, root.sub(1 + 2 * static_cast<std::uint64_t>(k)),
          warm ? &warm->y_models[static_cast<std::size_t>(k)] : nullptr));
      res.w_models.push_back(detail::fit_outcome(
          w_view, x_fit, w_fit, wt_fit, cfg, root.sub(2 + 2 * static_cast<std::uint64_t>(k)),
          warm ? &warm->w_models[static_cast<std::size_t>(k)] : nullptr));
    } catch (const std::exception& e) {
      throw std::runtime_error("crossfit: fold " + std::to_string(k) +
                               " fit failed: " + e.what());
    }

    const auto& ym = as_cdf(res.y_models.back());
    const auto& wm = as_cdf(res.w_models.back());
    for (const std::size_t i : eval_idx) {
      const auto row = static_cast<Eigen::Index>(i);
      const std::span<const double> xi(data.x.row(row).data(),
                                       static_cast<std::size_t>(data.p()));
      const double yi = data.y[row];
      const double wi = data.w[row];
      res.ranks.u_hat[i] = data.y_spec.ordinal()
                               ? omega_rank(ym.cdf(yi, xi), ym.cdf_left(yi, xi), cfg.omega)
                               : ym.cdf(yi, xi);
      res.ranks.v_hat[i] = data.w_spec.ordinal()
                               ? omega_rank(wm.cdf(wi, xi), wm.cdf_left(wi, xi), cfg.omega)
                               : wm.cdf(wi, xi);
    }
  }
  return res;
}

// Recomputes the omega-blended ranks from already fitted fold models. Cheap:
// no refits, so sweeping omega over a grid reuses one cross-fit.
inline RankSet reblend_ranks(const Dataset& data, const CrossfitResult& fitted, double omega) {
  if (!(omega >= 0.0 && omega <= 1.0))
    throw std::invalid_argument("reblend_ranks: omega outside [0,1]");
  const std::size_t n = static_cast<std::size_t>(data.n());
  if (fitted.plan.assignment.size() != n)
    throw std::invalid_argument("reblend_ranks: fitted result does not match data");
  RankSet out;
  out.u_hat.assign(n, 0.0);
  out.v_hat.assign(n, 0.0);
  out.fold = fitted.plan.assignment;
  out.folds = fitted.plan.folds;
  if (data.y_spec.ordinal() || data.w_spec.ordinal()) out.omega = omega;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const int k = fitted.plan.assignment[i];
    const std::span<const double> xi(data.x.row(row).data(),
                                     static_cast<std::size_t>(data.p()));
    const auto& ym = as_cdf(fitted.y_models[static_cast<std::size_t>(k)]);
    const auto& wm = as_cdf(fitted.w_models[static_cast<std::size_t>(k)]);
    const double yi = data.y[row];
    const double wi = data.w[row];
    out.u_hat[i] = data.y_spec.ordinal()
                       ? omega_rank(ym.cdf(yi, xi), ym.cdf_left(yi, xi), omega)
                       : ym.cdf(yi, xi);
    out.v_hat[i] = data.w_spec.ordinal()
                       ? omega_rank(wm.cdf(wi, xi), wm.cdf_left(wi, xi), omega)
                       : wm.cdf(wi, xi);
  }
  return out;
}

}  // namespace crrr
