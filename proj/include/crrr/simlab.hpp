#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crrr/crossfit.hpp"
#include "crrr/dgp.hpp"
#include "crrr/estimators.hpp"
#include "crrr/stats.hpp"
#include "crrr/truth.hpp"

// Monte Carlo driver, calibration (PIT) tables, and tie-parameter sweeps for
// the benchmark designs. Everything here composes the generators in dgp.hpp,
// the cross-fitting pipeline, and the population curves in truth.hpp; no new
// estimation logic lives in this header.

namespace crrr {

// Desk-scale study sizes: large enough that the bias structure of each
// estimator is visible, small enough for a single workstation run. The
// full-scale sizes are what the reference tables use.
inline constexpr int kDeskReps = 5;
inline constexpr int kDeskN = 50'000;
inline constexpr int kFullReps = 30;
inline constexpr int kFullN = 100'000;

// Which per-repetition statistic a Monte Carlo run records.
enum class McStatistic { slope, corr };

// Summary of repeated estimates against a known population value. sd is the
// sample standard deviation of the estimates; mad and rmse measure deviation
// from truth, so rmse^2 = bias^2 + sd^2 * (reps - 1) / reps exactly.
struct McResult {
  double truth = 0.0;
  std::vector<double> estimates;
  double mean = 0.0;
  double sd = 0.0;
  double mad = 0.0;
  double rmse = 0.0;
  double bias() const { return mean - truth; }
  int reps() const { return static_cast<int>(estimates.size()); }
};

inline McResult summarize_mc(std::vector<double> estimates, double truth) {
  if (estimates.size() < 2)
    throw std::invalid_argument("summarize_mc: need at least 2 estimates");
  McResult out;
  out.truth = truth;
  out.estimates = std::move(estimates);
  out.mean = mean(out.estimates);
  out.sd = std::sqrt(sample_variance(out.estimates));
  long double abs_sum = 0.0L;
  long double sq_sum = 0.0L;
  for (double e : out.estimates) {
    const long double d = static_cast<long double>(e) - truth;
    abs_sum += d < 0 ? -d : d;
    sq_sum += d * d;
  }
  const auto r = static_cast<long double>(out.estimates.size());
  out.mad = static_cast<double>(abs_sum / r);
  out.rmse = static_cast<double>(sqrtl(sq_sum / r));
  return out;
}

// Runs `reps` independent repetitions of: draw a fresh sample of size n from
// the design, cross-fit conditional ranks, record the rank-rank statistic.
// Repetition r draws data from substream 2r of the design seed and folds from
// substream 2r+1, so repetitions are order-free and could run concurrently.
// Any failure inside a repetition is rethrown with the repetition index.
inline McResult mc_run(const DgpSpec& dgp, const CrossfitConfig& cfg, int reps, int n,
                       double truth, McStatistic statistic = McStatistic::slope) {
  if (reps < 2) throw std::invalid_argument("mc_run: need reps >= 2");
  DgpSpec spec = dgp;
  spec.n = n;
  spec.validate();
  const RngStream root(dgp.seed);
  std::vector<double> estimates(static_cast<std::size_t>(reps), 0.0);
  for (int r = 0; r < reps; ++r) {
    try {
      const auto id = static_cast<std::uint64_t>(r);
      RngStream data_rng = root.sub(2 * id);
      const Dataset data = generate(spec, data_rng);
      CrossfitConfig rep_cfg = cfg;
      rep_cfg.seed = root.sub(2 * id + 1).next_u64();
      const CrossfitResult fit = crossfit_ranks(data, rep_cfg);
      estimates[static_cast<std::size_t>(r)] =
          statistic == McStatistic::slope ? rho_ols(fit.ranks) : rho_corr(fit.ranks);
    } catch (const std::exception& e) {
      throw std::runtime_error("mc_run: repetition " + std::to_string(r) + ": " + e.what());
    }
  }
  return summarize_mc(std::move(estimates), truth);
}

// One row of a calibration table: a named slice of probability integral
// transform values with its uniformity diagnostics. mean should sit near 1/2
// and variance near 1/12 when the fitted conditional distribution is right;
// variance uses the population convention so an exact uniform grid of size n
// scores (1 - 1/n^2) / 12.
struct PitCell {
  std::string variable;
  std::string group;
  std::string method;
  std::size_t count = 0;
  double ks_stat = 0.0;
  double ks_p = 1.0;
  double chi2_stat = 0.0;
  double chi2_p = 1.0;
  double mean = 0.0;
  double variance = 0.0;
};

inline PitCell pit_cell(std::string variable, std::string group, std::string method,
                        std::span<const double> pit, int bins = 10) {
  if (pit.empty()) throw std::invalid_argument("pit_cell: empty slice");
  PitCell cell;
  cell.variable = std::move(variable);
  cell.group = std::move(group);
  cell.method = std::move(method);
  cell.count = pit.size();
  const GofResult ks = ks_uniform_test(pit);
  const GofResult chi2 = chi2_uniform_test(pit, bins);
  cell.ks_stat = ks.statistic;
  cell.ks_p = ks.p_value;
  cell.chi2_stat = chi2.statistic;
  cell.chi2_p = chi2.p_value;
  cell.mean = crrr::mean(pit);
  cell.variance = crrr::variance(pit);
  return cell;
}

// Splits cross-fitted ranks by an integer group label and reports one cell
// per outcome and group, child ranks first, groups in ascending label order.
// Continuous ranks are PIT values, so this is the calibration table for a
// continuous fit; group labels render as "x=<label>".
inline std::vector<PitCell> pit_report(const RankSet& ranks, std::span<const int> group,
                                       const std::string& method, int bins = 10) {
  if (group.size() != ranks.u_hat.size())
    throw std::invalid_argument("pit_report: group labels do not match rank count");
  if (group.empty()) throw std::invalid_argument("pit_report: empty ranks");
  std::vector<int> labels(group.begin(), group.end());
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  std::vector<PitCell> cells;
  cells.reserve(2 * labels.size());
  const std::span<const double> u(ranks.u_hat);
  const std::span<const double> v(ranks.v_hat);
  for (const std::span<const double> slice : {u, v}) {
    const char* variable = slice.data() == u.data() ? "child" : "parent";
    for (int label : labels) {
      std::vector<double> pit;
      pit.reserve(slice.size());
      for (std::size_t i = 0; i < slice.size(); ++i)
        if (group[i] == label) pit.push_back(slice[i]);
      cells.push_back(
          pit_cell(variable, "x=" + std::to_string(label), method, pit, bins));
    }
  }
  return cells;
}

// Evenly spaced tie-parameter grid over [0,1], endpoints included.
inline std::vector<double> default_omega_grid(int points = 11) {
  if (points < 2) throw std::invalid_argument("default_omega_grid: need at least 2 points");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i)
    grid[static_cast<std::size_t>(i)] = static_cast<double>(i) / (points - 1);
  return grid;
}

struct SweepRow {
  double omega = 0.0;
  double rho_c = 0.0;     // cross-fitted rank-rank slope
  double rho_s = 0.0;     // cross-fitted rank correlation
  double sd_ratio = 1.0;  // sd(child ranks) / sd(parent ranks)
  double rho_true = 0.0;  // population value at this omega
};

// Draws one sample from the design, cross-fits once, and replays the omega
// blend across the grid; ranks are affine in omega, so no model is refit.
// Continuous designs give flat rows. rho_true comes from the population
// curve, which for the complex discrete design is a Monte Carlo oracle whose
// cost is controlled by oracle_draws.
inline std::vector<SweepRow> omega_sweep(const DgpSpec& dgp, const CrossfitConfig& cfg,
                                         std::span<const double> grid,
                                         long oracle_draws = kTruthOracleDraws,
                                         std::uint64_t oracle_seed = kTruthOracleSeed) {
  for (double w : grid)
    if (!(w >= 0.0 && w <= 1.0))
      throw std::invalid_argument("omega_sweep: grid point outside [0,1]");
  if (grid.empty()) return {};
  const Dataset data = generate(dgp);
  const CrossfitResult fit = crossfit_ranks(data, cfg);
  const RhoCurve curve = true_rho_curve(dgp, oracle_draws, oracle_seed);
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (double w : grid) {
    const RankSet ranks = reblend_ranks(data, fit, w);
    SweepRow row;
    row.omega = w;
    row.rho_c = rho_ols(ranks);
    row.rho_s = rho_corr(ranks);
    row.sd_ratio = std::sqrt(variance(ranks.u_hat) / variance(ranks.v_hat));
    row.rho_true = curve.eval(w);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace crrr
