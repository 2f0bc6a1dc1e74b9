#pragma once

// Exchangeable-bootstrap inference: draw nonnegative exchangeable weights,
// refit every fold model under the weighted likelihood, recompute out-of-fold
// ranks, and summarize the weighted estimates with an IQR-based standard
// error and a studentized symmetric confidence interval.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crrr/crossfit.hpp"
#include "crrr/estimators.hpp"
#include "crrr/stats.hpp"

namespace crrr {

enum class WeightScheme { multinomial, dirichlet };

inline const char* scheme_name(WeightScheme s) {
  return s == WeightScheme::multinomial ? "multinomial" : "dirichlet";
}

inline WeightScheme parse_scheme(const std::string& s) {
  if (s == "multinomial") return WeightScheme::multinomial;
  if (s == "dirichlet") return WeightScheme::dirichlet;
  throw std::invalid_argument("unknown weight scheme: " + s);
}

// Multinomial counts sum to n exactly, so their mean is exactly one.
// Dirichlet-style weights are iid unit exponentials; their mean only tends
// to one, which normalize_weights makes exact.
inline std::vector<double> gen_weights(WeightScheme scheme, std::size_t n, RngStream rng) {
  if (n == 0) throw std::invalid_argument("gen_weights: n must be positive");
  std::vector<double> w(n, 0.0);
  if (scheme == WeightScheme::multinomial) {
    for (std::size_t j = 0; j < n; ++j) w[rng.uniform_int(n)] += 1.0;
  } else {
    for (auto& wi : w) wi = rng.exponential();
  }
  return w;
}

inline std::vector<double> normalize_weights(std::vector<double> w) {
  if (w.empty()) throw std::invalid_argument("normalize_weights: empty vector");
  double sum = 0.0;
  for (const double wi : w) {
    if (!(wi >= 0.0) || !std::isfinite(wi))
      throw std::invalid_argument("normalize_weights: weights must be finite and nonnegative");
    sum += wi;
  }
  const double mean = sum / static_cast<double>(w.size());
  if (!(mean > 0.0)) throw std::invalid_argument("normalize_weights: all weights are zero");
  for (auto& wi : w) wi /= mean;
  return w;
}

struct WeightedRho {
  double ols = 0.0;
  double corr = 0.0;
  double cov = 0.0;
};

inline WeightedRho weighted_rho(const RankSet& ranks, std::span<const double> w) {
  return {rho_ols(ranks, w), rho_corr(ranks, w), rho_cov(ranks, w)};
}

// Scale-equivariant spread taken from the quartiles of a draw distribution.
inline double iqr_sd(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  const double denom = std_normal_quantile(0.75) - std_normal_quantile(0.25);
  return iqr(std::move(v)) / denom;
}

struct SeAci {
  double se = 0.0;
  double sigma_hat = 0.0;
  double t_crit = 0.0;
  std::pair<double, double> aci{0.0, 0.0};
};

// Centered draws on the root-n scale, quartile-based sd, and the studentized
// symmetric interval. Identical draws are a well-defined degenerate case
// (zero standard error); a zero IQR with draws that still vary is not.
inline SeAci se_and_aci(std::span<const double> draws, double main, std::size_t n,
                        double alpha) {
  if (draws.size() < 2) throw std::invalid_argument("se_and_aci: need at least two draws");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("se_and_aci: alpha in (0,1)");
  const double root_n = std::sqrt(static_cast<double>(n));
  std::vector<double> z(draws.size());
  bool all_equal = true;
  for (std::size_t b = 0; b < draws.size(); ++b) {
    z[b] = root_n * (draws[b] - main);
    if (draws[b] != draws[0]) all_equal = false;
  }
  SeAci out;
  if (all_equal) {
    out.aci = {main, main};
    return out;
  }
  out.sigma_hat = iqr_sd(z);
  if (!(out.sigma_hat > 0.0))
    throw std::domain_error("se_and_aci: zero interquartile range across varying draws");
  out.se = out.sigma_hat / root_n;
  std::vector<double> t(z.size());
  for (std::size_t b = 0; b < z.size(); ++b) t[b] = std::abs(z[b]) / out.sigma_hat;
  out.t_crit = empirical_quantile(std::move(t), 1.0 - alpha);
  const double half = out.t_crit * out.sigma_hat / root_n;
  out.aci = {main - half, main + half};
  return out;
}

struct BootstrapConfig {
  CrossfitConfig crossfit;
  WeightScheme scheme = WeightScheme::multinomial;
  int draws = 500;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  bool warm_start = true;           // seed refits from the main fit's parameters
  double max_fail_fraction = 0.05;  // abort when more draws than this fail
};

struct BootstrapDraw {
  int b = 0;
  bool ok = false;
  double rho_ols = std::numeric_limits<double>::quiet_NaN();
  double rho_corr = std::numeric_limits<double>::quiet_NaN();
  double rho_cov = std::numeric_limits<double>::quiet_NaN();
  double rrr_slope = std::numeric_limits<double>::quiet_NaN();
  std::string error;
};

struct FormSummary {
  double main = 0.0;
  SeAci inference;
};

struct BootstrapRun {
  int requested = 0;
  int failures = 0;
  double alpha = 0.05;
  bool small_draw_count = false;  // below the level where the SE is trustworthy
  std::vector<BootstrapDraw> draws;
  FormSummary ols, corr, cov, rrr, between;
};

// Supplies the raw weight vector for draw b; overridable for testing.
using WeightProvider = std::function<std::vector<double>(int b, RngStream rng)>;

// Runs the full weighted-refit bootstrap. The main fit is reused when given,
// otherwise computed here. Draw b is a pure function of (seed, b): weights
// and the refit's training randomness both derive from that pair alone.
inline BootstrapRun bootstrap_rho(const Dataset& data, const BootstrapConfig& cfg,
                                  const CrossfitResult* main_fit = nullptr,
                                  const WeightProvider& provider = {}) {
  if (cfg.draws < 2) throw std::invalid_argument("bootstrap_rho: need at least two draws");
  CrossfitResult local_main;
  if (!main_fit) {
    local_main = crossfit_ranks(data, cfg.crossfit);
    main_fit = &local_main;
  }
  const std::size_t n = static_cast<std::size_t>(data.n());
  const double rrr_omega = main_fit->ranks.omega.value_or(1.0);
  const std::span<const double> y_all(data.y.data(), n);
  const std::span<const double> w_all(data.w.data(), n);

  BootstrapRun run;
  run.requested = cfg.draws;
  run.alpha = cfg.alpha;
  run.small_draw_count = cfg.draws < 50;
  run.ols.main = rho_ols(main_fit->ranks);
  run.corr.main = rho_corr(main_fit->ranks);
  run.cov.main = rho_cov(main_fit->ranks);
  run.rrr.main = rrr_slope(y_all, w_all, rrr_omega);
  run.between.main = run.rrr.main - run.ols.main;

  const RngStream root(cfg.seed);
  for (int b = 0; b < cfg.draws; ++b) {
    BootstrapDraw d;
    d.b = b;
    RngStream draw_rng = root.sub(static_cast<std::uint64_t>(b) + 1);
    try {
      std::vector<double> raw = provider
                                    ? provider(b, draw_rng.sub(0))
                                    : gen_weights(cfg.scheme, n, draw_rng.sub(0));
      if (raw.size() != n) throw std::invalid_argument("weight provider returned wrong length");
      const std::vector<double> w = normalize_weights(std::move(raw));
      CrossfitConfig refit_cfg = cfg.crossfit;
      refit_cfg.seed = draw_rng.sub(1).next_u64();
      const CrossfitResult refit = crossfit_ranks(
          data, refit_cfg, w, cfg.warm_start ? main_fit : nullptr, &main_fit->plan);
      const WeightedRho rho = weighted_rho(refit.ranks, w);
      d.rho_ols = rho.ols;
      d.rho_corr = rho.corr;
      d.rho_cov = rho.cov;
      d.rrr_slope = rrr_slope(y_all, w_all, rrr_omega, w);
      d.ok = true;
    } catch (const std::exception& e) {
      d.error = e.what();
      ++run.failures;
    }
    run.draws.push_back(std::move(d));
  }

  const double budget = cfg.max_fail_fraction * static_cast<double>(cfg.draws);
  if (static_cast<double>(run.failures) > budget) {
    throw std::runtime_error("bootstrap_rho: " + std::to_string(run.failures) + " of " +
                             std::to_string(cfg.draws) + " draws failed");
  }

  auto summarize = [&](FormSummary& s, auto field) {
    std::vector<double> ok_draws;
    ok_draws.reserve(run.draws.size());
    for (const auto& d : run.draws)
      if (d.ok) ok_draws.push_back(field(d));
    s.inference = se_and_aci(ok_draws, s.main, n, cfg.alpha);
  };
  summarize(run.ols, [](const BootstrapDraw& d) { return d.rho_ols; });
  summarize(run.corr, [](const BootstrapDraw& d) { return d.rho_corr; });
  summarize(run.cov, [](const BootstrapDraw& d) { return d.rho_cov; });
  summarize(run.rrr, [](const BootstrapDraw& d) { return d.rrr_slope; });
  summarize(run.between, [](const BootstrapDraw& d) { return d.rrr_slope - d.rho_ols; });
  return run;
}

}  // namespace crrr
