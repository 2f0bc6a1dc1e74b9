#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "crrr/ddctm.hpp"

using crrr::Activation;
using crrr::DdctmFitConfig;
using crrr::DdctmLoss;
using crrr::DdctmModel;
using crrr::Mat;
using crrr::Mlp;
using crrr::RngStream;

namespace {

DdctmModel random_model(int categories, int input, RngStream& rng) {
  Mlp net(input, {8}, categories, Activation::tanh_unit, rng);
  return DdctmModel(categories, std::move(net));
}

}  // namespace

TEST_CASE("cdf vector is monotone and ends at one", "[ddctm]") {
  RngStream rng(5, 0);
  for (int rep = 0; rep < 10; ++rep) {
    const int K = 2 + static_cast<int>(rng.uniform_int(7));
    auto model = random_model(K, 2, rng);
    const std::vector<double> x{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    const Eigen::VectorXd f = model.cdf_vector(x);
    REQUIRE(f.size() == K);
    double prev = 0.0;
    for (int k = 0; k < K; ++k) {
      REQUIRE(f[k] >= prev);
      REQUIRE(f[k] <= 1.0);
      prev = f[k];
    }
    REQUIRE(f[K - 1] == 1.0);

    const Eigen::VectorXd p = model.pmf_vector(x);
    double s = 0.0;
    for (int k = 0; k < K; ++k) {
      REQUIRE(p[k] >= 0.0);
      s += p[k];
    }
    REQUIRE(s == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("cdf and left cdf handle boundary categories", "[ddctm]") {
  RngStream rng(6, 1);
  auto model = random_model(4, 1, rng);
  const std::vector<double> x{0.3};
  CHECK(model.cdf(-1.0, x) == 0.0);
  CHECK(model.cdf(3.0, x) == 1.0);
  CHECK(model.cdf(7.0, x) == 1.0);
  CHECK(model.cdf_left(0.0, x) == 0.0);
  CHECK(model.cdf_left(4.0, x) == 1.0);
  const Eigen::VectorXd f = model.cdf_vector(x);
  CHECK(model.cdf(1.0, x) == f[1]);
  CHECK(model.cdf_left(2.0, x) == f[1]);
  // Left limit sits strictly below the cdf whenever the category has mass.
  CHECK(model.cdf_left(1.0, x) == f[0]);
}

TEST_CASE("ordinal loss gradient matches finite differences", "[ddctm]") {
  RngStream rng(2025, 2);
  for (int rep = 0; rep < 20; ++rep) {
    const int K = 2 + static_cast<int>(rng.uniform_int(7));
    std::vector<double> labels(6);
    for (auto& v : labels) v = static_cast<double>(rng.uniform_int(K));
    const bool weighted = rng.bernoulli(0.5);
    std::vector<double> cw;
    if (weighted) cw = crrr::inverse_frequency_weights(labels, K);
    const DdctmLoss loss(labels, K, cw);

    std::vector<double> out(K), grad(K);
    for (auto& v : out) v = rng.uniform(-2.0, 2.0);
    const std::size_t i = rng.uniform_int(labels.size());
    loss.loss_grad(out.data(), i, grad.data());

    const double h = 1e-6;
    double worst = 0.0;
    for (int k = 0; k < K; ++k) {
      auto plus = out, minus = out;
      plus[k] += h;
      minus[k] -= h;
      const double fd =
          (loss.loss_grad(plus.data(), i, nullptr) - loss.loss_grad(minus.data(), i, nullptr)) /
          (2.0 * h);
      const double denom = std::max({std::fabs(fd), std::fabs(grad[k]), 1e-3});
      worst = std::max(worst, std::fabs(fd - grad[k]) / denom);
    }
    REQUIRE(worst < 1e-4);
  }
}

TEST_CASE("inverse frequency weights normalize to unit sample mean", "[ddctm]") {
  const std::vector<double> labels{0, 0, 0, 1, 2, 2};
  const auto w = crrr::inverse_frequency_weights(labels, 4);
  // Three classes present; scale = 6 / 3 = 2.
  CHECK(w[0] == Catch::Approx(2.0 / 3.0));
  CHECK(w[1] == Catch::Approx(2.0));
  CHECK(w[2] == Catch::Approx(1.0));
  CHECK(w[3] == 0.0);
  double mean = 0.0;
  for (double v : labels) mean += w[static_cast<std::size_t>(v)];
  CHECK(mean / labels.size() == Catch::Approx(1.0).margin(1e-15));
  CHECK_THROWS_AS(crrr::inverse_frequency_weights(labels, 2), std::invalid_argument);
}

TEST_CASE("fit matches within-group empirical cdfs", "[ddctm][slow]") {
  // Two covariate groups with different category distributions; the grouped
  // training path applies because x takes two values.
  RngStream rng(424242, 0);
  const int n = 12000;
  const int K = 5;
  const std::vector<std::vector<double>> probs{
      {0.30, 0.25, 0.20, 0.15, 0.10},
      {0.05, 0.15, 0.30, 0.30, 0.20},
  };
  std::vector<double> labels(n);
  Mat x(n, 1);
  std::vector<std::vector<double>> empirical(2, std::vector<double>(K, 0.0));
  std::vector<double> group_n(2, 0.0);
  for (int i = 0; i < n; ++i) {
    const int g = rng.bernoulli(0.5) ? 1 : 0;
    x(i, 0) = g;
    const double u = rng.next_double();
    double acc = 0.0;
    int k = K - 1;
    for (int j = 0; j < K; ++j) {
      acc += probs[g][j];
      if (u < acc) {
        k = j;
        break;
      }
    }
    labels[i] = k;
    empirical[g][k] += 1.0;
    group_n[g] += 1.0;
  }
  for (int g = 0; g < 2; ++g) {
    double acc = 0.0;
    for (int k = 0; k < K; ++k) {
      acc += empirical[g][k] / group_n[g];
      empirical[g][k] = acc;
    }
  }

  DdctmFitConfig cfg;
  cfg.categories = K;
  cfg.train.hidden = {16};
  cfg.train.max_epochs = 150;
  cfg.train.patience = 15;
  const auto fit = crrr::fit_ddctm(labels, x, cfg, rng.sub(1));

  for (int g = 0; g < 2; ++g) {
    const std::vector<double> probe{static_cast<double>(g)};
    const Eigen::VectorXd f = fit.model.cdf_vector(probe);
    for (int k = 0; k < K; ++k) {
      REQUIRE(f[k] == Catch::Approx(empirical[g][k]).margin(0.02));
    }
  }
}

TEST_CASE("balanced class weights reproduce the unweighted fit", "[ddctm]") {
  // With perfectly balanced labels every class weight is exactly one, so the
  // weighted loss is bitwise identical to the plain one.
  RngStream rng(31415, 3);
  const int n = 400;
  const int K = 4;
  std::vector<double> labels(n);
  Mat x(n, 1);
  for (int i = 0; i < n; ++i) {
    labels[i] = i % K;
    x(i, 0) = rng.uniform(-1.0, 1.0);
  }
  DdctmFitConfig plain;
  plain.categories = K;
  plain.train.hidden = {8};
  plain.train.max_epochs = 6;
  auto weighted = plain;
  weighted.class_weights = true;
  const auto a = crrr::fit_ddctm(labels, x, plain, RngStream(77, 0));
  const auto b = crrr::fit_ddctm(labels, x, weighted, RngStream(77, 0));
  REQUIRE(a.model.net().get_params() == b.model.net().get_params());
}

TEST_CASE("label validation", "[ddctm]") {
  const std::vector<double> bad{0.0, 1.0, 2.5};
  CHECK_THROWS_AS(DdctmLoss(bad, 4), std::invalid_argument);
  const std::vector<double> neg{0.0, -1.0};
  CHECK_THROWS_AS(DdctmLoss(neg, 4), std::invalid_argument);
  RngStream rng(1, 1);
  CHECK_THROWS_AS(DdctmModel(1, Mlp(1, {}, 1, Activation::rectifier, rng)),
                  std::invalid_argument);
}
