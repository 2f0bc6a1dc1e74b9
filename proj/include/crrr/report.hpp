#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crrr/bootstrap.hpp"
#include "crrr/crossfit.hpp"
#include "crrr/dataset.hpp"
#include "crrr/estimators.hpp"
#include "crrr/jsonio.hpp"
#include "crrr/transition.hpp"

// Mobility tables for survey data: the classic marginal-rank slope next to
// the conditional forms, per-subgroup rows, optional bootstrap inference, and
// decile transition matrices. Ordinal outcomes repeat the table once per
// requested tie parameter; models are fit once per row and only the rank
// blend changes across those blocks.

namespace crrr {

struct NamedMask {
  std::string name;
  std::vector<unsigned char> mask;  // aligned with dataset rows, 1 keeps the row
};

struct MobilityConfig {
  CrossfitConfig crossfit;
  std::vector<double> omegas{0.5};  // ordinal outcomes: one block per value
  int bootstrap_draws = 0;          // 0 disables inference
  WeightScheme scheme = WeightScheme::multinomial;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  std::size_t min_subgroup = 100;  // below this a subgroup gets no bootstrap
  int transition_bins = 10;
};

// Bootstrap summaries for every reported form of one row.
struct RowInference {
  int draws = 0;
  int failures = 0;
  FormSummary ols, corr, cov, rrr, between;
};

struct MobilityRow {
  std::string label;
  std::size_t n = 0;
  bool below_min = false;  // too small for inference; estimate may still exist
  bool estimated = false;
  std::string error;  // why estimation or inference was skipped, when it was
  EstimateReport estimate;
  std::optional<RowInference> inference;
};

struct MobilityBlock {
  std::optional<double> omega;  // unset for continuous outcomes
  std::vector<MobilityRow> rows;
};

struct MobilityReport {
  std::size_t n = 0;
  std::string family;
  std::vector<MobilityBlock> blocks;  // rows[0] is the full sample in each block
  std::optional<TransitionMatrix> transition;  // absent when n < 10 bins
};

namespace detail {

inline Dataset subset_rows(const Dataset& data, const std::vector<unsigned char>& mask) {
  if (mask.size() != static_cast<std::size_t>(data.n()))
    throw std::invalid_argument("mobility_report: subgroup mask length mismatch");
  Eigen::Index m = 0;
  for (unsigned char keep : mask) m += keep ? 1 : 0;
  Dataset out;
  out.y.resize(m);
  out.w.resize(m);
  out.x.resize(m, data.p());
  out.y_spec = data.y_spec;
  out.w_spec = data.w_spec;
  out.x_names = data.x_names;
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    out.y[r] = data.y[i];
    out.w[r] = data.w[i];
    out.x.row(r) = data.x.row(i);
    ++r;
  }
  return out;
}

// The smallest sample a per-row fit will be attempted on.
inline std::size_t estimation_floor(const CrossfitConfig& cfg) {
  return static_cast<std::size_t>(cfg.folds) * 8;
}

}  // namespace detail

inline MobilityReport mobility_report(const Dataset& data, std::span<const NamedMask> subgroups,
                                      const MobilityConfig& cfg) {
  data.validate();
  if (cfg.bootstrap_draws < 0)
    throw std::invalid_argument("mobility_report: negative bootstrap draws");
  const bool ordinal = data.y_spec.ordinal() || data.w_spec.ordinal();
  std::vector<std::optional<double>> block_omegas;
  if (ordinal) {
    if (cfg.omegas.empty())
      throw std::invalid_argument("mobility_report: ordinal outcomes need at least one omega");
    for (double w : cfg.omegas) {
      if (!(w >= 0.0 && w <= 1.0))
        throw std::invalid_argument("mobility_report: omega outside [0,1]");
      block_omegas.emplace_back(w);
    }
  } else {
    block_omegas.emplace_back(std::nullopt);
  }

  MobilityReport report;
  report.n = static_cast<std::size_t>(data.n());
  report.family = family_name(cfg.crossfit.family);
  report.blocks.resize(block_omegas.size());
  for (std::size_t b = 0; b < block_omegas.size(); ++b)
    report.blocks[b].omega = block_omegas[b];

  const RngStream root(cfg.seed);
  for (std::size_t r = 0; r <= subgroups.size(); ++r) {
    const bool full_sample = r == 0;
    MobilityRow base;
    Dataset rows;
    if (full_sample) {
      base.label = "all";
      rows = data;
    } else {
      const NamedMask& g = subgroups[r - 1];
      base.label = g.name;
      rows = detail::subset_rows(data, g.mask);
    }
    base.n = static_cast<std::size_t>(rows.n());
    base.below_min = !full_sample && base.n < cfg.min_subgroup;

    if (base.n < detail::estimation_floor(cfg.crossfit)) {
      base.error = "too few rows to fit";
      for (MobilityBlock& block : report.blocks) block.rows.push_back(base);
      continue;
    }

    CrossfitConfig fit_cfg = cfg.crossfit;
    fit_cfg.seed = root.sub(r).next_u64();
    CrossfitResult fit;
    try {
      fit = crossfit_ranks(rows, fit_cfg);
    } catch (const std::exception& e) {
      base.error = e.what();
      for (MobilityBlock& block : report.blocks) block.rows.push_back(base);
      continue;
    }

    const std::span<const double> child(rows.y.data(), base.n);
    const std::span<const double> parent(rows.w.data(), base.n);
    for (std::size_t b = 0; b < block_omegas.size(); ++b) {
      MobilityRow row = base;
      CrossfitResult view;
      view.plan = fit.plan;
      view.y_models = fit.y_models;
      view.w_models = fit.w_models;
      view.ranks = block_omegas[b] ? reblend_ranks(rows, fit, *block_omegas[b]) : fit.ranks;
      row.estimate = make_report(view.ranks, child, parent);
      row.estimate.seed = fit_cfg.seed;
      row.estimate.family = report.family;
      row.estimated = true;

      if (cfg.bootstrap_draws > 0 && !row.below_min) {
        BootstrapConfig bcfg;
        bcfg.crossfit = fit_cfg;
        if (block_omegas[b]) bcfg.crossfit.omega = *block_omegas[b];
        bcfg.scheme = cfg.scheme;
        bcfg.draws = cfg.bootstrap_draws;
        bcfg.alpha = cfg.alpha;
        bcfg.seed = root.sub(r).sub(b + 1).next_u64();
        try {
          const BootstrapRun run = bootstrap_rho(rows, bcfg, &view);
          RowInference inf;
          inf.draws = run.requested;
          inf.failures = run.failures;
          inf.ols = run.ols;
          inf.corr = run.corr;
          inf.cov = run.cov;
          inf.rrr = run.rrr;
          inf.between = run.between;
          row.inference = inf;
          row.estimate.se = run.ols.inference.se;
          row.estimate.aci = run.ols.inference.aci;
          row.estimate.bootstrap_draws = run.requested;
        } catch (const std::exception& e) {
          row.error = e.what();
        }
      }
      report.blocks[b].rows.push_back(std::move(row));
    }
  }

  if (data.n() >= 10L * cfg.transition_bins) {
    const std::span<const double> y_all(data.y.data(), report.n);
    const std::span<const double> w_all(data.w.data(), report.n);
    report.transition = transition_matrix(y_all, w_all, cfg.transition_bins);
  }
  return report;
}

namespace detail {

inline ordered_json form_to_json(const FormSummary& s) {
  ordered_json j;
  j["estimate"] = s.main;
  j["se"] = s.inference.se;
  j["sigma_hat"] = s.inference.sigma_hat;
  j["t_crit"] = s.inference.t_crit;
  j["aci"] = {s.inference.aci.first, s.inference.aci.second};
  return j;
}

inline ordered_json matrix_to_json(const Mat& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

inline ordered_json mobility_report_to_json(const MobilityReport& report) {
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["n"] = report.n;
  j["family"] = report.family;
  j["blocks"] = ordered_json::array();
  for (const MobilityBlock& block : report.blocks) {
    ordered_json bj;
    if (block.omega)
      bj["omega"] = *block.omega;
    else
      bj["omega"] = nullptr;
    bj["rows"] = ordered_json::array();
    for (const MobilityRow& row : block.rows) {
      ordered_json rj;
      rj["label"] = row.label;
      rj["n"] = row.n;
      rj["below_min"] = row.below_min;
      rj["estimated"] = row.estimated;
      if (!row.error.empty()) rj["error"] = row.error;
      if (row.estimated) {
        ordered_json ej;
        ej["rrr_slope"] = row.estimate.rrr_slope;
        ej["rho_ols"] = row.estimate.rho_ols;  // headline conditional form
        ej["rho_corr"] = row.estimate.rho_corr;
        ej["rho_cov"] = row.estimate.rho_cov;
        ej["between_component"] = row.estimate.between_component;
        ej["folds"] = row.estimate.folds;
        rj["estimates"] = std::move(ej);
      }
      if (row.inference) {
        ordered_json ij;
        ij["draws"] = row.inference->draws;
        ij["failures"] = row.inference->failures;
        ij["rrr"] = detail::form_to_json(row.inference->rrr);
        ij["ols"] = detail::form_to_json(row.inference->ols);
        ij["corr"] = detail::form_to_json(row.inference->corr);
        ij["cov"] = detail::form_to_json(row.inference->cov);
        ij["between"] = detail::form_to_json(row.inference->between);
        rj["inference"] = std::move(ij);
      }
      bj["rows"].push_back(std::move(rj));
    }
    j["blocks"].push_back(std::move(bj));
  }
  if (report.transition) {
    ordered_json tj;
    tj["bins"] = report.transition->q;
    tj["p"] = detail::matrix_to_json(report.transition->p);
    tj["deviation_percent"] = detail::matrix_to_json(report.transition->d);
    tj["row_count"] = report.transition->row_count;
    tj["uniform_fill"] = ordered_json::array();
    for (unsigned char f : report.transition->uniform_fill)
      tj["uniform_fill"].push_back(f != 0);
    j["transition"] = std::move(tj);
  }
  return j;
}

}  // namespace crrr
