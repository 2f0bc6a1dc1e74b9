#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crrr/csv.hpp"
#include "crrr/dataset.hpp"
#include "crrr/jsonio.hpp"
#include "crrr/stats.hpp"

// Survey CSV ingestion: column selection, income transforms, median
// imputation, row filters, and named subgroups. Predicates always compare the
// raw cell value, before any transform, so a filter like income > 0 reads the
// same way as the survey codebook. Row numbers in error messages are 1-based
// over the data rows (the header is row 0).

namespace crrr {

enum class Transform { none, log1p };

inline const char* transform_name(Transform t) {
  return t == Transform::log1p ? "log1p" : "none";
}

inline Transform parse_transform(const std::string& s) {
  if (s == "none") return Transform::none;
  if (s == "log1p") return Transform::log1p;
  throw std::invalid_argument("column spec: unknown transform '" + s + "'");
}

enum class Impute { none, median };

inline const char* impute_name(Impute i) { return i == Impute::median ? "median" : "none"; }

inline Impute parse_impute(const std::string& s) {
  if (s == "none") return Impute::none;
  if (s == "median") return Impute::median;
  throw std::invalid_argument("column spec: unknown imputation '" + s + "'");
}

enum class CmpOp { eq, ne, lt, le, gt, ge };

inline const char* cmp_name(CmpOp op) {
  switch (op) {
    case CmpOp::eq: return "==";
    case CmpOp::ne: return "!=";
    case CmpOp::lt: return "<";
    case CmpOp::le: return "<=";
    case CmpOp::gt: return ">";
    default: return ">=";
  }
}

inline CmpOp parse_cmp(const std::string& s) {
  if (s == "==") return CmpOp::eq;
  if (s == "!=") return CmpOp::ne;
  if (s == "<") return CmpOp::lt;
  if (s == "<=") return CmpOp::le;
  if (s == ">") return CmpOp::gt;
  if (s == ">=") return CmpOp::ge;
  throw std::invalid_argument("column spec: unknown comparator '" + s + "'");
}

// One comparison against a raw numeric cell. Missing values fail every
// comparison, including !=.
struct Predicate {
  std::string column;
  CmpOp op = CmpOp::eq;
  double value = 0.0;

  bool eval(double x) const {
    if (std::isnan(x)) return false;
    switch (op) {
      case CmpOp::eq: return x == value;
      case CmpOp::ne: return x != value;
      case CmpOp::lt: return x < value;
      case CmpOp::le: return x <= value;
      case CmpOp::gt: return x > value;
      default: return x >= value;
    }
  }
};

struct OutcomeColumn {
  std::string column;
  OutcomeSpec spec;
  Transform transform = Transform::none;
};

struct CovariateColumn {
  std::string column;
  Transform transform = Transform::none;
  Impute impute = Impute::none;
};

struct NamedSubgroup {
  std::string name;
  Predicate where;
};

struct ColumnSpec {
  OutcomeColumn child;
  OutcomeColumn parent;
  std::vector<CovariateColumn> covariates;
  std::vector<Predicate> filters;
  std::vector<NamedSubgroup> subgroups;

  void validate() const {
    if (child.column.empty() || parent.column.empty())
      throw std::invalid_argument("column spec: child and parent columns are required");
    if (child.column == parent.column)
      throw std::invalid_argument("column spec: child and parent must be distinct columns");
    if (covariates.empty())
      throw std::invalid_argument("column spec: at least one covariate is required");
    for (const OutcomeColumn* oc : {&child, &parent}) {
      if (oc->spec.ordinal() && oc->spec.categories < 2)
        throw std::invalid_argument("column spec: ordinal outcome needs >= 2 categories");
      if (oc->spec.ordinal() && oc->transform != Transform::none)
        throw std::invalid_argument("column spec: ordinal outcomes take no transform");
    }
    for (const NamedSubgroup& g : subgroups)
      if (g.name.empty()) throw std::invalid_argument("column spec: subgroup needs a name");
  }
};

namespace detail {

inline void check_keys(const ordered_json& obj, std::initializer_list<const char*> allowed,
                       const char* where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok)
      throw std::invalid_argument(std::string("column spec: unknown key '") + key + "' in " +
                                  where);
  }
}

inline Predicate predicate_from_json(const ordered_json& j, const char* where) {
  Predicate p;
  p.column = j.at("column").get<std::string>();
  p.op = parse_cmp(j.at("op").get<std::string>());
  p.value = j.at("value").get<double>();
  (void)where;
  return p;
}

inline OutcomeColumn outcome_from_json(const ordered_json& j, const char* where) {
  check_keys(j, {"column", "kind", "categories", "transform"}, where);
  OutcomeColumn oc;
  oc.column = j.at("column").get<std::string>();
  const std::string kind = j.value("kind", std::string("continuous"));
  if (kind == "continuous") {
    oc.spec.kind = OutcomeKind::continuous;
  } else if (kind == "ordinal") {
    oc.spec.kind = OutcomeKind::ordinal;
    oc.spec.categories = j.at("categories").get<int>();
  } else {
    throw std::invalid_argument("column spec: unknown outcome kind '" + kind + "'");
  }
  oc.transform = parse_transform(j.value("transform", std::string("none")));
  return oc;
}

inline ordered_json outcome_to_json(const OutcomeColumn& oc) {
  ordered_json j;
  j["column"] = oc.column;
  j["kind"] = oc.spec.ordinal() ? "ordinal" : "continuous";
  if (oc.spec.ordinal()) j["categories"] = oc.spec.categories;
  j["transform"] = transform_name(oc.transform);
  return j;
}

}  // namespace detail

inline ColumnSpec column_spec_from_json(const ordered_json& j) {
  detail::check_keys(
      j, {"format_version", "child", "parent", "covariates", "filters", "subgroups"},
      "column spec");
  ColumnSpec spec;
  spec.child = detail::outcome_from_json(j.at("child"), "child");
  spec.parent = detail::outcome_from_json(j.at("parent"), "parent");
  for (const ordered_json& c : j.at("covariates")) {
    detail::check_keys(c, {"column", "transform", "impute"}, "covariate");
    CovariateColumn cc;
    cc.column = c.at("column").get<std::string>();
    cc.transform = parse_transform(c.value("transform", std::string("none")));
    cc.impute = parse_impute(c.value("impute", std::string("none")));
    spec.covariates.push_back(std::move(cc));
  }
  if (j.contains("filters"))
    for (const ordered_json& f : j.at("filters")) {
      detail::check_keys(f, {"column", "op", "value"}, "filter");
      spec.filters.push_back(detail::predicate_from_json(f, "filter"));
    }
  if (j.contains("subgroups"))
    for (const ordered_json& g : j.at("subgroups")) {
      detail::check_keys(g, {"name", "column", "op", "value"}, "subgroup");
      NamedSubgroup ng;
      ng.name = g.at("name").get<std::string>();
      ng.where = detail::predicate_from_json(g, "subgroup");
      spec.subgroups.push_back(std::move(ng));
    }
  spec.validate();
  return spec;
}

inline ordered_json column_spec_to_json(const ColumnSpec& spec) {
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["child"] = detail::outcome_to_json(spec.child);
  j["parent"] = detail::outcome_to_json(spec.parent);
  j["covariates"] = ordered_json::array();
  for (const CovariateColumn& c : spec.covariates) {
    ordered_json cj;
    cj["column"] = c.column;
    cj["transform"] = transform_name(c.transform);
    cj["impute"] = impute_name(c.impute);
    j["covariates"].push_back(std::move(cj));
  }
  j["filters"] = ordered_json::array();
  for (const Predicate& f : spec.filters) {
    ordered_json fj;
    fj["column"] = f.column;
    fj["op"] = cmp_name(f.op);
    fj["value"] = f.value;
    j["filters"].push_back(std::move(fj));
  }
  j["subgroups"] = ordered_json::array();
  for (const NamedSubgroup& g : spec.subgroups) {
    ordered_json gj;
    gj["name"] = g.name;
    gj["column"] = g.where.column;
    gj["op"] = cmp_name(g.where.op);
    gj["value"] = g.where.value;
    j["subgroups"].push_back(std::move(gj));
  }
  return j;
}

struct IngestReport {
  std::size_t rows_in = 0;
  std::size_t rows_kept = 0;
  std::size_t dropped_filter = 0;
  std::size_t dropped_missing_outcome = 0;
  // Per-covariate imputation counts and the medians substituted, in spec
  // order; only covariates with median imputation appear.
  std::vector<std::pair<std::string, std::size_t>> imputed;
  std::vector<std::pair<std::string, double>> medians;

  std::size_t imputed_cells() const {
    std::size_t total = 0;
    for (const auto& [column, count] : imputed) total += count;
    return total;
  }
};

struct IngestResult {
  Dataset data;
  IngestReport report;
  // One mask per spec subgroup, aligned with the kept rows of data.
  std::vector<std::vector<unsigned char>> subgroup_masks;
};

namespace detail {

inline double apply_transform(double x, Transform t, const std::string& column,
                              std::size_t row) {
  if (t == Transform::none) return x;
  if (!(x > -1.0))
    throw std::runtime_error("ingest: log1p needs a value > -1 in column '" + column +
                             "' at row " + std::to_string(row));
  return std::log1p(x);
}

// Missing cells become NaN; anything else must parse as a number.
inline double raw_cell(const CsvTable& table, std::size_t row, std::size_t col) {
  const std::string& cell = table.rows[row][col];
  if (csv_missing(cell)) return std::numeric_limits<double>::quiet_NaN();
  try {
    return parse_double(cell);
  } catch (const std::exception&) {
    throw std::runtime_error("ingest: non-numeric cell '" + cell + "' in column '" +
                             table.header[col] + "' at row " + std::to_string(row + 1));
  }
}

}  // namespace detail

inline IngestResult ingest_csv(const CsvTable& table, const ColumnSpec& spec) {
  spec.validate();
  const std::size_t child_col = table.col(spec.child.column);
  const std::size_t parent_col = table.col(spec.parent.column);
  std::vector<std::size_t> cov_cols;
  for (const CovariateColumn& c : spec.covariates) cov_cols.push_back(table.col(c.column));
  std::vector<std::size_t> filter_cols;
  for (const Predicate& f : spec.filters) filter_cols.push_back(table.col(f.column));
  std::vector<std::size_t> group_cols;
  for (const NamedSubgroup& g : spec.subgroups) group_cols.push_back(table.col(g.where.column));

  IngestResult out;
  out.report.rows_in = table.n_rows();
  const std::size_t p = spec.covariates.size();

  std::vector<double> y;
  std::vector<double> w;
  std::vector<double> x;  // row-major, p per row
  std::vector<std::size_t> missing_count(p, 0);
  out.subgroup_masks.resize(spec.subgroups.size());

  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    const std::size_t row_no = r + 1;
    bool keep = true;
    for (std::size_t f = 0; f < spec.filters.size(); ++f)
      keep = keep && spec.filters[f].eval(detail::raw_cell(table, r, filter_cols[f]));
    if (!keep) {
      ++out.report.dropped_filter;
      continue;
    }

    const double yraw = detail::raw_cell(table, r, child_col);
    const double wraw = detail::raw_cell(table, r, parent_col);
    if (std::isnan(yraw) || std::isnan(wraw)) {
      ++out.report.dropped_missing_outcome;
      continue;
    }
    for (const OutcomeColumn* oc : {&spec.child, &spec.parent}) {
      const double v = oc == &spec.child ? yraw : wraw;
      if (oc->spec.ordinal() &&
          (v != std::floor(v) || v < 0.0 || v >= oc->spec.categories))
        throw std::runtime_error("ingest: ordinal label " + format_double(v) +
                                 " outside 0.." + std::to_string(oc->spec.categories - 1) +
                                 " in column '" + oc->column + "' at row " +
                                 std::to_string(row_no));
    }
    y.push_back(detail::apply_transform(yraw, spec.child.transform, spec.child.column, row_no));
    w.push_back(
        detail::apply_transform(wraw, spec.parent.transform, spec.parent.column, row_no));

    for (std::size_t c = 0; c < p; ++c) {
      const double v = detail::raw_cell(table, r, cov_cols[c]);
      if (std::isnan(v)) {
        if (spec.covariates[c].impute != Impute::median)
          throw std::runtime_error("ingest: missing value in column '" +
                                   spec.covariates[c].column + "' at row " +
                                   std::to_string(row_no) + " (no imputation configured)");
        ++missing_count[c];
        x.push_back(v);
      } else {
        x.push_back(detail::apply_transform(v, spec.covariates[c].transform,
                                            spec.covariates[c].column, row_no));
      }
    }

    for (std::size_t g = 0; g < spec.subgroups.size(); ++g)
      out.subgroup_masks[g].push_back(
          spec.subgroups[g].where.eval(detail::raw_cell(table, r, group_cols[g])) ? 1 : 0);
  }

  const std::size_t n = y.size();
  out.report.rows_kept = n;
  if (n == 0) throw std::runtime_error("ingest: no rows survive the filters");

  // Median imputation over the kept sample, computed on the transformed scale.
  for (std::size_t c = 0; c < p; ++c) {
    if (spec.covariates[c].impute != Impute::median) continue;
    std::vector<double> observed;
    observed.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      if (!std::isnan(x[i * p + c])) observed.push_back(x[i * p + c]);
    if (observed.empty())
      throw std::runtime_error("ingest: column '" + spec.covariates[c].column +
                               "' has no observed values to impute from");
    const double med = empirical_quantile(std::move(observed), 0.5);
    for (std::size_t i = 0; i < n; ++i)
      if (std::isnan(x[i * p + c])) x[i * p + c] = med;
    out.report.imputed.emplace_back(spec.covariates[c].column, missing_count[c]);
    out.report.medians.emplace_back(spec.covariates[c].column, med);
  }

  out.data.y = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(n));
  out.data.w = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(n));
  out.data.x = Eigen::Map<const Mat>(x.data(), static_cast<Eigen::Index>(n),
                                     static_cast<Eigen::Index>(p));
  out.data.y_spec = spec.child.spec;
  out.data.w_spec = spec.parent.spec;
  for (const CovariateColumn& c : spec.covariates) out.data.x_names.push_back(c.column);
  out.data.validate();
  return out;
}

inline IngestResult ingest_csv(const std::filesystem::path& path, const ColumnSpec& spec) {
  return ingest_csv(read_csv_file(path), spec);
}

}  // namespace crrr
