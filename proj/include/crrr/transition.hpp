#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "crrr/ranks.hpp"
#include "crrr/types.hpp"

// Marginal-rank transition matrices: the conditional probability that the
// child lands in rank bin j given the parent sits in bin i. Bins come from
// ties-to-upper marginal ranks with edges at multiples of 1/Q, so a rank of
// exactly k/Q belongs to bin k-1.

namespace crrr {

struct TransitionMatrix {
  int q = 10;
  Mat p;                                  // q x q, rows sum to 1
  Mat d;                                  // percent deviation from 1/q: 100 * (q * p - 1)
  std::vector<long> row_count;            // parent-bin occupancy
  std::vector<unsigned char> uniform_fill;  // 1 where an empty row was filled uniformly
};

namespace detail {

// Bin index from a ties-to-upper rank m/n, in exact integer arithmetic.
inline int rank_bin(double rank, long n, int q) {
  const long m = std::lround(rank * static_cast<double>(n));
  const long num = m * static_cast<long>(q);
  long bin = (num + n - 1) / n - 1;  // ceil(m q / n) - 1
  if (bin < 0) bin = 0;
  if (bin >= q) bin = q - 1;
  return static_cast<int>(bin);
}

}  // namespace detail

inline TransitionMatrix transition_matrix(std::span<const double> child,
                                          std::span<const double> parent, int q = 10) {
  if (q < 2) throw std::invalid_argument("transition_matrix: need q >= 2");
  if (child.size() != parent.size())
    throw std::invalid_argument("transition_matrix: length mismatch");
  const long n = static_cast<long>(child.size());
  if (n < 10L * q)
    throw std::invalid_argument("transition_matrix: need at least 10 rows per bin");

  const std::vector<double> u = marginal_ranks(child, 1.0);
  const std::vector<double> v = marginal_ranks(parent, 1.0);

  TransitionMatrix out;
  out.q = q;
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(q, q);
  for (std::size_t i = 0; i < child.size(); ++i)
    counts(detail::rank_bin(v[i], n, q), detail::rank_bin(u[i], n, q)) += 1;

  out.p = Mat::Zero(q, q);
  out.d = Mat::Zero(q, q);
  out.row_count.assign(static_cast<std::size_t>(q), 0);
  out.uniform_fill.assign(static_cast<std::size_t>(q), 0);
  for (int i = 0; i < q; ++i) {
    const long total = counts.row(i).sum();
    out.row_count[static_cast<std::size_t>(i)] = total;
    if (total == 0) {
      out.uniform_fill[static_cast<std::size_t>(i)] = 1;
      out.p.row(i).setConstant(1.0 / q);
    } else {
      for (int j = 0; j < q; ++j)
        out.p(i, j) = static_cast<double>(counts(i, j)) / static_cast<double>(total);
    }
    for (int j = 0; j < q; ++j) out.d(i, j) = 100.0 * (q * out.p(i, j) - 1.0);
  }
  return out;
}

}  // namespace crrr
