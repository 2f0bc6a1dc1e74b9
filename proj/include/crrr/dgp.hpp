#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crrr/dataset.hpp"
#include "crrr/rng.hpp"
#include "crrr/special.hpp"
#include "crrr/stats.hpp"

namespace crrr {

// Four benchmark data-generating processes. The simple designs condition a
// bivariate normal outcome pair on one binary covariate; the complex designs
// pass correlated normal latents through covariate-dependent location/scale
// and a convex monotone warp. Each has a discretized variant that bins both
// outcomes into ordered categories with right-closed cells (c_k, c_{k+1}].

enum class DgpKind { simple_normal, complex_continuous, simple_discrete, complex_discrete };

inline std::string dgp_name(DgpKind k) {
  switch (k) {
    case DgpKind::simple_normal: return "simple-normal";
    case DgpKind::complex_continuous: return "complex-continuous";
    case DgpKind::simple_discrete: return "simple-discrete";
    case DgpKind::complex_discrete: return "complex-discrete";
  }
  throw std::logic_error("dgp_name: bad kind");
}

inline DgpKind parse_dgp(const std::string& s) {
  if (s == "simple-normal") return DgpKind::simple_normal;
  if (s == "complex-continuous") return DgpKind::complex_continuous;
  if (s == "simple-discrete") return DgpKind::simple_discrete;
  if (s == "complex-discrete") return DgpKind::complex_discrete;
  throw std::invalid_argument("parse_dgp: unknown design '" + s + "'");
}

struct DgpSpec {
  DgpKind kind = DgpKind::simple_normal;

  // Simple designs: (Y,W) | X=x is bivariate normal with means
  // (mu_y, mu_w - delta*x), common scale sigma, correlation rho_p,
  // and X ~ Bernoulli(1/2). delta is a level shock to the parent
  // outcome of the x=1 group.
  double delta = 0.0;
  double mu_y = 165.0;
  double mu_w = 180.0;
  double sigma = 4.0;
  double rho_p = 0.6;

  // Complex designs: latent (Z1,Z2) standard bivariate normal with
  // correlation rho0; covariates i.i.d. Unif[-1,1]. The warp is
  // g(z) = z + alpha*softplus(beta*z). p >= 8; columns past the
  // eighth are pure noise regressors.
  double rho0 = 0.6;
  int p = 8;
  double alpha_y = 0.8, beta_y = 1.2;
  double alpha_w = 0.6, beta_w = 1.0;

  // Discrete variants only: strictly ascending interior cutoffs,
  // one fewer than the category count.
  std::vector<double> cutoffs_y;
  std::vector<double> cutoffs_w;

  int n = 0;
  std::uint64_t seed = 1;

  bool discrete() const {
    return kind == DgpKind::simple_discrete || kind == DgpKind::complex_discrete;
  }

  void validate() const {
    if (n < 1) throw std::invalid_argument("DgpSpec: n must be >= 1");
    if (kind == DgpKind::complex_continuous || kind == DgpKind::complex_discrete) {
      if (p < 8) throw std::invalid_argument("DgpSpec: complex designs need p >= 8");
      if (!(rho0 > -1.0 && rho0 < 1.0)) {
        throw std::invalid_argument("DgpSpec: rho0 must lie in (-1, 1)");
      }
    }
    if (discrete()) {
      check_cutoffs(cutoffs_y, "cutoffs_y");
      check_cutoffs(cutoffs_w, "cutoffs_w");
    }
  }

 private:
  static void check_cutoffs(const std::vector<double>& c, const char* which) {
    if (c.empty()) throw std::invalid_argument(std::string("DgpSpec: ") + which + " is empty");
    for (std::size_t k = 1; k < c.size(); ++k) {
      if (!(c[k - 1] < c[k])) {
        throw std::invalid_argument(std::string("DgpSpec: ") + which + " must ascend strictly");
      }
    }
  }
};

// g(z) = z + alpha*softplus(beta*z). Strictly increasing and convex:
// g'(z) = 1 + alpha*beta*logistic(beta*z) in (1, 1 + alpha*beta).
inline double monotone_warp(double z, double alpha, double beta) {
  return z + alpha * softplus(beta * z);
}

// Solves monotone_warp(z) = t by Newton; convexity makes the iteration
// globally convergent once an iterate lands on the f >= 0 side.
inline double monotone_warp_inv(double t, double alpha, double beta) {
  if (!std::isfinite(t)) return t;  // g preserves the infinities
  double z = t > 0.0 ? t / (1.0 + alpha * beta) : t;
  for (int it = 0; it < 80; ++it) {
    const double f = monotone_warp(z, alpha, beta) - t;
    if (std::fabs(f) <= 1e-14 * (1.0 + std::fabs(t))) return z;
    z -= f / (1.0 + alpha * beta * logistic(beta * z));
  }
  throw std::runtime_error("monotone_warp_inv: no convergence");
}

// Location/scale maps of the complex design, functions of the first
// eight covariates.
inline double complex_mean_y(std::span<const double> x) {
  return 6.0 * std::sin(std::numbers::pi * x[0] * x[1]) + 2.0 * (x[2] * x[2] - x[3] * x[3]);
}
inline double complex_scale_y(std::span<const double> x) {
  return std::exp(0.5 + 0.6 * x[4] + 0.5 * x[5] * x[6] - 0.3 * x[7]);
}
inline double complex_mean_w(std::span<const double> x) {
  return 4.0 * std::cos(std::numbers::pi * x[0]) + 3.0 * x[1] * x[2];
}
inline double complex_scale_w(std::span<const double> x) {
  return std::exp(0.3 + 0.5 * x[3] - 0.5 * x[4] * x[5]);
}

// Scalar index summarizing how strongly a covariate row bends the
// outcome maps. Plotting aid only: no estimator consumes it, and
// generators never append it to the covariate matrix.
inline double viz_heterogeneity_index(std::span<const double> x) {
  return 0.8 * x[0] * x[1] + 0.6 * (x[2] * x[2] - x[3] * x[3]) +
         0.8 * std::sin(std::numbers::pi * x[4]) + 0.6 * x[5] * x[6];
}

// Interior quantile cutoffs of N(mu, sigma^2) at k/bins, k = 1..bins-1.
inline std::vector<double> normal_quantile_cutoffs(double mu, double sigma, int bins = 8) {
  if (bins < 2) throw std::invalid_argument("normal_quantile_cutoffs: bins must be >= 2");
  std::vector<double> c(static_cast<std::size_t>(bins) - 1);
  for (int k = 1; k < bins; ++k) {
    c[static_cast<std::size_t>(k) - 1] = mu + sigma * std_normal_quantile(double(k) / bins);
  }
  return c;
}

// category = #{c_k < y}: right-closed bins, a value equal to a cutoff
// falls in the lower cell.
inline std::vector<int> discretize(std::span<const double> y, std::span<const double> cutoffs) {
  for (std::size_t k = 1; k < cutoffs.size(); ++k) {
    if (!(cutoffs[k - 1] < cutoffs[k])) {
      throw std::invalid_argument("discretize: cutoffs must ascend strictly");
    }
  }
  std::vector<int> cat(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    int k = 0;
    while (k < static_cast<int>(cutoffs.size()) && cutoffs[static_cast<std::size_t>(k)] < y[i]) {
      ++k;
    }
    cat[i] = k;
  }
  return cat;
}

// Rebins both outcomes in place and flips their specs to ordinal with
// K = #cutoffs + 1 categories.
inline Dataset discretize_outcomes(Dataset data, std::span<const double> cutoffs_y,
                                   std::span<const double> cutoffs_w) {
  const std::vector<int> ky = discretize({data.y.data(), static_cast<std::size_t>(data.y.size())},
                                         cutoffs_y);
  const std::vector<int> kw = discretize({data.w.data(), static_cast<std::size_t>(data.w.size())},
                                         cutoffs_w);
  for (Eigen::Index i = 0; i < data.y.size(); ++i) {
    data.y[i] = ky[static_cast<std::size_t>(i)];
    data.w[i] = kw[static_cast<std::size_t>(i)];
  }
  data.y_spec = {OutcomeKind::ordinal, static_cast<int>(cutoffs_y.size()) + 1};
  data.w_spec = {OutcomeKind::ordinal, static_cast<int>(cutoffs_w.size()) + 1};
  data.validate();
  return data;
}

inline Dataset gen_simple_normal(double delta, int n, RngStream& rng, double mu_y = 165.0,
                                 double mu_w = 180.0, double sigma = 4.0, double rho_p = 0.6) {
  if (n < 1) throw std::invalid_argument("gen_simple_normal: n must be >= 1");
  Dataset d;
  d.y.resize(n);
  d.w.resize(n);
  d.x.resize(n, 1);
  d.x_names = {"x"};
  // Cholesky factor of sigma^2 [[1, rho],[rho, 1]] applied to iid normals.
  const double mix = std::sqrt(1.0 - rho_p * rho_p);
  for (int i = 0; i < n; ++i) {
    const double x = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    d.x(i, 0) = x;
    d.y[i] = mu_y + sigma * z1;
    d.w[i] = mu_w - delta * x + sigma * (rho_p * z1 + mix * z2);
  }
  return d;
}

inline Dataset gen_complex_continuous(int n, RngStream& rng, double rho0 = 0.6, int p = 8,
                                      double alpha_y = 0.8, double beta_y = 1.2,
                                      double alpha_w = 0.6, double beta_w = 1.0) {
  if (n < 1) throw std::invalid_argument("gen_complex_continuous: n must be >= 1");
  if (p < 8) throw std::invalid_argument("gen_complex_continuous: p must be >= 8");
  Dataset d;
  d.y.resize(n);
  d.w.resize(n);
  d.x.resize(n, p);
  d.x_names.resize(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) d.x_names[static_cast<std::size_t>(j)] = "x" + std::to_string(j + 1);
  const double mix = std::sqrt(1.0 - rho0 * rho0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) d.x(i, j) = rng.uniform(-1.0, 1.0);
    const double z1 = rng.normal();
    const double z2 = rho0 * z1 + mix * rng.normal();
    const std::span<const double> row(d.x.data() + static_cast<std::size_t>(i) * p,
                                      static_cast<std::size_t>(p));
    d.y[i] = complex_mean_y(row) + complex_scale_y(row) * monotone_warp(z1, alpha_y, beta_y);
    d.w[i] = complex_mean_w(row) + complex_scale_w(row) * monotone_warp(z2, alpha_w, beta_w);
  }
  return d;
}

// Spec factories carrying the benchmark defaults.
inline DgpSpec simple_normal_spec(double delta, int n, std::uint64_t seed) {
  DgpSpec s;
  s.kind = DgpKind::simple_normal;
  s.delta = delta;
  s.n = n;
  s.seed = seed;
  return s;
}

inline DgpSpec complex_continuous_spec(int n, std::uint64_t seed) {
  DgpSpec s;
  s.kind = DgpKind::complex_continuous;
  s.n = n;
  s.seed = seed;
  return s;
}

// Octile cutoffs of the delta = 0 marginals, deliberately reused for
// every delta so a shock shifts mass across fixed bins.
inline DgpSpec simple_discrete_spec(double delta, int n, std::uint64_t seed) {
  DgpSpec s = simple_normal_spec(delta, n, seed);
  s.kind = DgpKind::simple_discrete;
  s.cutoffs_y = normal_quantile_cutoffs(s.mu_y, s.sigma);
  s.cutoffs_w = normal_quantile_cutoffs(s.mu_w, s.sigma);
  return s;
}

inline DgpSpec complex_discrete_spec(int n, std::uint64_t seed, std::vector<double> cutoffs_y,
                                     std::vector<double> cutoffs_w) {
  DgpSpec s = complex_continuous_spec(n, seed);
  s.kind = DgpKind::complex_discrete;
  s.cutoffs_y = std::move(cutoffs_y);
  s.cutoffs_w = std::move(cutoffs_w);
  return s;
}

inline Dataset generate(const DgpSpec& spec, RngStream& rng) {
  spec.validate();
  switch (spec.kind) {
    case DgpKind::simple_normal:
      return gen_simple_normal(spec.delta, spec.n, rng, spec.mu_y, spec.mu_w, spec.sigma,
                               spec.rho_p);
    case DgpKind::complex_continuous:
      return gen_complex_continuous(spec.n, rng, spec.rho0, spec.p, spec.alpha_y, spec.beta_y,
                                    spec.alpha_w, spec.beta_w);
    case DgpKind::simple_discrete:
      return discretize_outcomes(gen_simple_normal(spec.delta, spec.n, rng, spec.mu_y, spec.mu_w,
                                                   spec.sigma, spec.rho_p),
                                 spec.cutoffs_y, spec.cutoffs_w);
    case DgpKind::complex_discrete:
      return discretize_outcomes(gen_complex_continuous(spec.n, rng, spec.rho0, spec.p,
                                                        spec.alpha_y, spec.beta_y, spec.alpha_w,
                                                        spec.beta_w),
                                 spec.cutoffs_y, spec.cutoffs_w);
  }
  throw std::logic_error("generate: bad kind");
}

inline Dataset generate(const DgpSpec& spec) {
  RngStream rng(spec.seed);
  return generate(spec, rng);
}

// Empirical octiles of a large calibration draw from the complex
// continuous design. The discrete complex benchmark pins these to a
// fixture so truths and estimates always share cutoffs.
inline constexpr std::uint64_t kComplexCutoffSeed = 986751;
inline constexpr int kComplexCutoffDraws = 1'000'000;

struct CutoffPair {
  std::vector<double> y;
  std::vector<double> w;
};

inline CutoffPair complex_calibration_cutoffs(int draws = kComplexCutoffDraws,
                                              std::uint64_t seed = kComplexCutoffSeed,
                                              int bins = 8) {
  if (bins < 2) throw std::invalid_argument("complex_calibration_cutoffs: bins must be >= 2");
  RngStream rng(seed);
  const Dataset d = gen_complex_continuous(draws, rng);
  std::vector<double> ys(d.y.data(), d.y.data() + d.y.size());
  std::vector<double> ws(d.w.data(), d.w.data() + d.w.size());
  std::sort(ys.begin(), ys.end());
  std::sort(ws.begin(), ws.end());
  CutoffPair c;
  c.y.resize(static_cast<std::size_t>(bins) - 1);
  c.w.resize(static_cast<std::size_t>(bins) - 1);
  for (int k = 1; k < bins; ++k) {
    c.y[static_cast<std::size_t>(k) - 1] = empirical_quantile_sorted(ys, double(k) / bins);
    c.w[static_cast<std::size_t>(k) - 1] = empirical_quantile_sorted(ws, double(k) / bins);
  }
  return c;
}

}  // namespace crrr
