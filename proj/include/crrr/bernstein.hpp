#pragma once

#include <stdexcept>
#include <vector>

namespace crrr {

// Bernstein basis of degree j at u, all j+1 values, by the de Casteljau
// recurrence. Nonnegative and summing to one for u in [0, 1].
inline void bernstein_basis(double u, int degree, double* out) {
  if (degree < 0) throw std::invalid_argument("bernstein_basis: negative degree");
  const double v = 1.0 - u;
  out[0] = 1.0;
  for (int j = 1; j <= degree; ++j) {
    out[j] = u * out[j - 1];
    for (int k = j - 1; k >= 1; --k) out[k] = u * out[k - 1] + v * out[k];
    out[0] = v * out[0];
  }
}

inline std::vector<double> bernstein_basis(double u, int degree) {
  std::vector<double> out(static_cast<std::size_t>(degree) + 1);
  bernstein_basis(u, degree, out.data());
  return out;
}

}  // namespace crrr
