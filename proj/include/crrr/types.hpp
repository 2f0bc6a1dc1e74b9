#pragma once

#include <Eigen/Dense>

namespace crrr {

// Sample batches are row-major so each row is a contiguous span; adapters and
// basis writers hand raw row pointers around under that assumption.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace crrr
