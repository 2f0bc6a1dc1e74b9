#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "crrr/ranks.hpp"
#include "crrr/rng.hpp"

using crrr::marginal_ranks;
using crrr::omega_rank;
using crrr::RngStream;
using crrr::weighted_marginal_ranks;

TEST_CASE("pointwise rank blends the cdf and its left limit", "[ranks]") {
  CHECK(omega_rank(0.7, 0.4, 1.0) == 0.7);
  CHECK(omega_rank(0.7, 0.4, 0.0) == 0.4);
  CHECK(omega_rank(0.7, 0.4, 0.5) == Catch::Approx(0.55));
  // Single-category variable: F = 1, F_left = 0.
  for (double w : {0.0, 0.25, 0.5, 1.0}) CHECK(omega_rank(1.0, 0.0, w) == Catch::Approx(w));
  // Continuous case: left limit equals the cdf, omega drops out.
  for (double w : {0.0, 0.3, 1.0}) CHECK(omega_rank(0.62, 0.62, w) == Catch::Approx(0.62));
  CHECK_THROWS_AS(omega_rank(0.5, 0.6, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(omega_rank(0.5, 0.4, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(omega_rank(1.2, 0.4, 0.5), std::invalid_argument);
}

TEST_CASE("pointwise rank is affine in omega", "[ranks]") {
  RngStream rng(21, 0);
  for (int t = 0; t < 200; ++t) {
    const double fl = rng.next_double();
    const double f = fl + (1.0 - fl) * rng.next_double();
    const double w = rng.next_double();
    const double blend = (1.0 - w) * omega_rank(f, fl, 0.0) + w * omega_rank(f, fl, 1.0);
    CHECK(omega_rank(f, fl, w) == Catch::Approx(blend).margin(1e-15));
  }
}

TEST_CASE("worked tied-sample ranks match published values", "[ranks]") {
  const std::vector<double> y{3, 4, 7, 7, 10, 11, 15, 15, 15, 15};

  const auto half = marginal_ranks(y, 0.5);
  const std::vector<double> want_half{0.1, 0.2, 0.35, 0.35, 0.5, 0.6, 0.85, 0.85, 0.85, 0.85};
  REQUIRE(half.size() == want_half.size());
  for (std::size_t i = 0; i < half.size(); ++i) {
    CHECK(half[i] == Catch::Approx(want_half[i]).margin(1e-12));
  }

  const auto top = marginal_ranks(y, 1.0);
  const std::vector<double> want_top{0.1, 0.2, 0.4, 0.4, 0.5, 0.6, 1.0, 1.0, 1.0, 1.0};
  for (std::size_t i = 0; i < top.size(); ++i) {
    CHECK(top[i] == Catch::Approx(want_top[i]).margin(1e-12));
  }

  const auto bottom = marginal_ranks(y, 0.0);
  const std::vector<double> want_bottom{0.1, 0.2, 0.3, 0.3, 0.5, 0.6, 0.7, 0.7, 0.7, 0.7};
  for (std::size_t i = 0; i < bottom.size(); ++i) {
    CHECK(bottom[i] == Catch::Approx(want_bottom[i]).margin(1e-12));
  }
}

TEST_CASE("distinct values rank as positions for every omega", "[ranks]") {
  RngStream rng(22, 0);
  const int n = 57;
  std::vector<double> r(n);
  for (auto& v : r) v = rng.normal();
  const auto at1 = marginal_ranks(r, 1.0);
  std::vector<double> sorted = at1;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < n; ++i) {
    CHECK(sorted[static_cast<std::size_t>(i)] ==
          Catch::Approx((i + 1) / static_cast<double>(n)).margin(1e-12));
  }
  // No ties: the omega choice cannot matter.
  const auto at0 = marginal_ranks(r, 0.0);
  for (int i = 0; i < n; ++i) {
    CHECK(at0[static_cast<std::size_t>(i)] ==
          Catch::Approx(at1[static_cast<std::size_t>(i)]).margin(1e-12));
  }
}

TEST_CASE("marginal ranks are affine in omega", "[ranks]") {
  const std::vector<double> y{5, 5, 2, 9, 9, 9, 1, 2};
  const auto r0 = marginal_ranks(y, 0.0);
  const auto r1 = marginal_ranks(y, 1.0);
  for (double w : {0.2, 0.5, 0.75}) {
    const auto rw = marginal_ranks(y, w);
    for (std::size_t i = 0; i < y.size(); ++i) {
      CHECK(rw[i] == Catch::Approx((1.0 - w) * r0[i] + w * r1[i]).margin(1e-14));
    }
  }
}

TEST_CASE("unit weights reproduce unweighted ranks bit for bit", "[ranks]") {
  RngStream rng(23, 0);
  std::vector<double> r(40);
  for (auto& v : r) v = std::floor(rng.uniform(0.0, 6.0));
  const std::vector<double> ones(r.size(), 1.0);
  for (double w : {0.0, 0.5, 1.0}) {
    const auto a = marginal_ranks(r, w);
    const auto b = weighted_marginal_ranks(r, ones, w);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(a[i] == b[i]);
  }
}

TEST_CASE("weighted cdf part matches a brute-force oracle", "[ranks]") {
  RngStream rng(24, 0);
  const int n = 30;
  std::vector<double> r(n), w(n);
  for (int i = 0; i < n; ++i) {
    r[static_cast<std::size_t>(i)] = std::floor(rng.uniform(0.0, 5.0));
    w[static_cast<std::size_t>(i)] = rng.uniform(0.1, 4.0);
  }
  double wsum = 0.0;
  for (double v : w) wsum += v;

  // At omega = 1 the rank is the weighted right-closed empirical CDF; the
  // oracle recomputes it by direct summation.
  const auto top = weighted_marginal_ranks(r, w, 1.0);
  for (int i = 0; i < n; ++i) {
    double mass = 0.0;
    for (int j = 0; j < n; ++j) {
      if (r[static_cast<std::size_t>(j)] <= r[static_cast<std::size_t>(i)]) {
        mass += w[static_cast<std::size_t>(j)];
      }
    }
    CHECK(top[static_cast<std::size_t>(i)] == Catch::Approx(mass / wsum).margin(1e-12));
  }

  // At omega = 0 the rank is the weight strictly below plus the sample's own
  // normalized mass.
  const auto bottom = weighted_marginal_ranks(r, w, 0.0);
  for (int i = 0; i < n; ++i) {
    double below = 0.0;
    for (int j = 0; j < n; ++j) {
      if (r[static_cast<std::size_t>(j)] < r[static_cast<std::size_t>(i)]) {
        below += w[static_cast<std::size_t>(j)];
      }
    }
    const double want = (below + w[static_cast<std::size_t>(i)]) / wsum;
    CHECK(bottom[static_cast<std::size_t>(i)] == Catch::Approx(want).margin(1e-12));
  }
}

TEST_CASE("weighted ranks stay within the unit interval and order", "[ranks]") {
  RngStream rng(25, 0);
  const int n = 200;
  std::vector<double> r(n), w(n);
  for (int i = 0; i < n; ++i) {
    r[static_cast<std::size_t>(i)] = std::floor(rng.uniform(0.0, 8.0));
    w[static_cast<std::size_t>(i)] = rng.exponential();
  }
  for (double om : {0.0, 0.4, 1.0}) {
    const auto rk = weighted_marginal_ranks(r, w, om);
    for (int i = 0; i < n; ++i) {
      CHECK(rk[static_cast<std::size_t>(i)] > 0.0);
      CHECK(rk[static_cast<std::size_t>(i)] <= 1.0);
      for (int j = 0; j < n; j += 17) {
        if (r[static_cast<std::size_t>(i)] < r[static_cast<std::size_t>(j)]) {
          CHECK(rk[static_cast<std::size_t>(i)] < rk[static_cast<std::size_t>(j)]);
        }
      }
    }
  }
}

TEST_CASE("rank input validation", "[ranks]") {
  const std::vector<double> r{1.0, 2.0};
  CHECK_THROWS_AS(marginal_ranks({}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(marginal_ranks(r, -0.1), std::invalid_argument);
  const std::vector<double> wshort{1.0};
  CHECK_THROWS_AS(weighted_marginal_ranks(r, wshort, 0.5), std::invalid_argument);
  const std::vector<double> wneg{1.0, -1.0};
  CHECK_THROWS_AS(weighted_marginal_ranks(r, wneg, 0.5), std::invalid_argument);
  const std::vector<double> wzero{0.0, 0.0};
  CHECK_THROWS_AS(weighted_marginal_ranks(r, wzero, 0.5), std::invalid_argument);
}
