#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace crrr {

// Tie-splitting rank from a conditional CDF evaluated at the outcome:
// omega blends the right-closed value F with the left limit F_left. For
// continuous models F == F_left and the result is F for every omega.
inline double omega_rank(double f, double f_left, double omega) {
  if (!(omega >= 0.0 && omega <= 1.0)) throw std::invalid_argument("omega_rank: omega outside [0,1]");
  if (!(f >= 0.0 && f <= 1.0) || !(f_left >= 0.0 && f_left <= 1.0) || f_left > f) {
    throw std::invalid_argument("omega_rank: need 0 <= F_left <= F <= 1");
  }
  return omega * f + (1.0 - omega) * f_left;
}

// Finite-sample marginal ranks with weighted observations. Each sample's
// rank blends the weighted empirical CDF at its value with the bottom of
// its own mass: omega * Fw + (1 - omega) * (Fw_left + w_i/n), the latter
// capped at Fw. Weights are normalized to unit mean internally; unit
// weights reproduce the unweighted convention exactly.
inline std::vector<double> weighted_marginal_ranks(std::span<const double> r,
                                                   std::span<const double> weights, double omega) {
  const std::size_t n = r.size();
  if (n == 0) throw std::invalid_argument("weighted_marginal_ranks: empty sample");
  if (!(omega >= 0.0 && omega <= 1.0)) {
    throw std::invalid_argument("weighted_marginal_ranks: omega outside [0,1]");
  }
  if (!weights.empty() && weights.size() != n) {
    throw std::invalid_argument("weighted_marginal_ranks: weight length mismatch");
  }
  double wsum = 0.0;
  if (!weights.empty()) {
    for (double w : weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("weighted_marginal_ranks: negative weight");
      wsum += w;
    }
    if (wsum <= 0.0) throw std::invalid_argument("weighted_marginal_ranks: zero total weight");
  }
  const auto norm = [&](std::size_t i) {
    return weights.empty() ? 1.0 : weights[i] * static_cast<double>(n) / wsum;
  };

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return r[a] < r[b]; });

  std::vector<double> rank(n);
  double below = 0.0;  // normalized weight strictly below the current tie group
  std::size_t a = 0;
  while (a < n) {
    std::size_t b = a;
    double tied = 0.0;
    while (b < n && r[order[b]] == r[order[a]]) tied += norm(order[b++]);
    const double f_left = std::min(below / static_cast<double>(n), 1.0);
    const double f = std::min((below + tied) / static_cast<double>(n), 1.0);
    for (std::size_t j = a; j < b; ++j) {
      const std::size_t i = order[j];
      const double bottom = std::min(f_left + norm(i) / static_cast<double>(n), f);
      rank[i] = omega * f + (1.0 - omega) * bottom;
    }
    below += tied;
    a = b;
  }
  return rank;
}

// Unweighted marginal ranks: omega * F(r_i) + (1 - omega) * (F_left(r_i) + 1/n)
// with empirical right-closed F and left limit F_left. At omega = 1 this is
// #{r_j <= r_i}/n; at omega = 0 every tied member takes the rank of the
// group's lowest position; distinct values rank the same for every omega.
inline std::vector<double> marginal_ranks(std::span<const double> r, double omega) {
  return weighted_marginal_ranks(r, {}, omega);
}

}  // namespace crrr
