#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "crrr/types.hpp"

namespace crrr {

enum class OutcomeKind { continuous, ordinal };

struct OutcomeSpec {
  OutcomeKind kind = OutcomeKind::continuous;
  int categories = 0;  // K for ordinal outcomes; ignored for continuous

  bool ordinal() const { return kind == OutcomeKind::ordinal; }
};

// A child/parent outcome pair with shared covariates.
struct Dataset {
  Eigen::VectorXd y;  // child outcome
  Eigen::VectorXd w;  // parent outcome
  Mat x;              // n x p covariates
  OutcomeSpec y_spec;
  OutcomeSpec w_spec;
  std::vector<std::string> x_names;  // optional, length p when present

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return x.cols(); }

  void validate() const {
    if (y.size() != w.size() || y.size() != x.rows()) {
      throw std::invalid_argument("Dataset: column lengths differ");
    }
    if (!x_names.empty() && static_cast<Eigen::Index>(x_names.size()) != x.cols()) {
      throw std::invalid_argument("Dataset: covariate name count mismatch");
    }
    check_ordinal(y, y_spec, "y");
    check_ordinal(w, w_spec, "w");
  }

 private:
  static void check_ordinal(const Eigen::VectorXd& v, const OutcomeSpec& spec, const char* which) {
    if (!spec.ordinal()) return;
    if (spec.categories < 2) {
      throw std::invalid_argument(std::string("Dataset: ") + which + " needs >= 2 categories");
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double r = v[i];
      if (r != std::floor(r) || r < 0.0 || r >= spec.categories) {
        throw std::invalid_argument(std::string("Dataset: ") + which +
                                    " has a value outside {0..K-1}");
      }
    }
  }
};

struct Subset {
  // Row indices into a Dataset, ascending.
  std::vector<std::size_t> rows;
};

}  // namespace crrr
