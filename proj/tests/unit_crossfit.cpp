#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "crrr/crossfit.hpp"
#include "crrr/rng.hpp"
#include "crrr/special.hpp"

using Catch::Matchers::WithinAbs;

namespace {

crrr::Dataset make_continuous_pair(std::size_t n, double latent_corr, std::uint64_t seed) {
  crrr::Dataset d;
  d.y.resize(static_cast<Eigen::Index>(n));
  d.w.resize(static_cast<Eigen::Index>(n));
  d.x.resize(static_cast<Eigen::Index>(n), 2);
  crrr::RngStream rng(seed);
  const double b = std::sqrt(1.0 - latent_corr * latent_corr);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double x0 = rng.normal();
    const double x1 = rng.uniform(-1.0, 1.0);
    const double e = rng.normal();
    const double h = latent_corr * e + b * rng.normal();
    d.x(r, 0) = x0;
    d.x(r, 1) = x1;
    d.y[r] = 1.0 * x0 - 0.5 * x1 + e;
    d.w[r] = 0.8 * x0 + 0.3 * x1 + h;
  }
  return d;
}

int discretize4(double v) {
  if (v < -0.6) return 0;
  if (v < 0.1) return 1;
  if (v < 0.9) return 2;
  return 3;
}

crrr::Dataset make_ordinal_pair(std::size_t n, std::uint64_t seed) {
  crrr::Dataset d;
  d.y.resize(static_cast<Eigen::Index>(n));
  d.w.resize(static_cast<Eigen::Index>(n));
  d.x.resize(static_cast<Eigen::Index>(n), 1);
  d.y_spec = {crrr::OutcomeKind::ordinal, 4};
  d.w_spec = {crrr::OutcomeKind::ordinal, 4};
  crrr::RngStream rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double z1 = rng.normal();
    const double z2 = 0.6 * z1 + 0.8 * rng.normal();
    d.x(r, 0) = rng.uniform(-1.0, 1.0);  // carries no signal
    d.y[r] = discretize4(z1);
    d.w[r] = discretize4(z2);
  }
  return d;
}

const crrr::DrContinuousModel& dr_cont(const crrr::FittedModel& m) {
  return std::get<crrr::DrContinuousModel>(m);
}

bool same_coefs(const crrr::DrContinuousModel& a, const crrr::DrContinuousModel& b) {
  if (a.fits().size() != b.fits().size()) return false;
  for (std::size_t j = 0; j < a.fits().size(); ++j) {
    if (a.fits()[j].coef != b.fits()[j].coef) return false;
  }
  return true;
}

crrr::TrainConfig tiny_train() {
  crrr::TrainConfig t;
  t.hidden = {4};
  t.max_epochs = 3;
  t.patience = 3;
  t.batch_size = 32;
  return t;
}

}  // namespace

TEST_CASE("fold plans are balanced, disjoint, and seed-deterministic", "[crossfit]") {
  const std::size_t n = 103;
  const auto plan = crrr::make_fold_plan(n, 5, crrr::RngStream(11));
  REQUIRE(plan.assignment.size() == n);
  std::vector<int> sizes(5, 0);
  for (int f : plan.assignment) {
    REQUIRE(f >= 0);
    REQUIRE(f < 5);
    ++sizes[static_cast<std::size_t>(f)];
  }
  CHECK(*std::max_element(sizes.begin(), sizes.end()) -
            *std::min_element(sizes.begin(), sizes.end()) <=
        1);
  for (int k = 0; k < 5; ++k) {
    CHECK(plan.members(k).size() == static_cast<std::size_t>(sizes[static_cast<std::size_t>(k)]));
    CHECK(plan.members(k).size() + plan.complement(k).size() == n);
  }

  const auto again = crrr::make_fold_plan(n, 5, crrr::RngStream(11));
  CHECK(again.assignment == plan.assignment);
  const auto other = crrr::make_fold_plan(n, 5, crrr::RngStream(12));
  CHECK(other.assignment != plan.assignment);

  CHECK_THROWS_AS(crrr::make_fold_plan(3, 5, crrr::RngStream(1)), std::invalid_argument);
  CHECK_THROWS_AS(crrr::make_fold_plan(10, 1, crrr::RngStream(1)), std::invalid_argument);
}

TEST_CASE("perturbing a held-out observation leaves its fold's models untouched",
          "[crossfit]") {
  auto data = make_continuous_pair(240, 0.5, 0xFA57u);
  crrr::CrossfitConfig cfg;
  cfg.family = crrr::ModelFamily::dr;
  cfg.folds = 3;
  cfg.seed = 21;
  cfg.dr_thresholds = 12;

  const auto base = crrr::crossfit_ranks(data, cfg);
  const auto fold0 = base.plan.members(0);
  REQUIRE(!fold0.empty());
  const std::size_t i0 = fold0.front();

  data.y[static_cast<Eigen::Index>(i0)] += 0.37;
  const auto bumped = crrr::crossfit_ranks(data, cfg);

  CHECK(bumped.plan.assignment == base.plan.assignment);
  CHECK(same_coefs(dr_cont(bumped.y_models[0]), dr_cont(base.y_models[0])));
  CHECK(same_coefs(dr_cont(bumped.w_models[0]), dr_cont(base.w_models[0])));
  // Scores of the other fold-0 members come from the identical model and
  // identical inputs, so they match bit for bit; i0's own rank moves.
  for (const std::size_t i : fold0) {
    CHECK(bumped.ranks.v_hat[i] == base.ranks.v_hat[i]);
    if (i != i0) CHECK(bumped.ranks.u_hat[i] == base.ranks.u_hat[i]);
  }
  CHECK(bumped.ranks.u_hat[i0] != base.ranks.u_hat[i0]);
  // The other folds trained on the perturbed point, so their fits differ.
  CHECK_FALSE(same_coefs(dr_cont(bumped.y_models[1]), dr_cont(base.y_models[1])));
}

TEST_CASE("network fold fits are leakage-free and seed-deterministic", "[crossfit]") {
  auto data = make_continuous_pair(90, 0.5, 0xFA58u);
  crrr::CrossfitConfig cfg;
  cfg.family = crrr::ModelFamily::dctm;
  cfg.folds = 3;
  cfg.seed = 5;
  cfg.degree = 6;
  cfg.train = tiny_train();

  const auto base = crrr::crossfit_ranks(data, cfg);
  const auto rerun = crrr::crossfit_ranks(data, cfg);
  CHECK(rerun.ranks.u_hat == base.ranks.u_hat);
  CHECK(rerun.ranks.v_hat == base.ranks.v_hat);

  const std::size_t i0 = base.plan.members(0).front();
  data.y[static_cast<Eigen::Index>(i0)] += 1.3;
  const auto bumped = crrr::crossfit_ranks(data, cfg);
  const auto& m0 = std::get<crrr::DctmModel>(base.y_models[0]);
  const auto& m0b = std::get<crrr::DctmModel>(bumped.y_models[0]);
  CHECK(m0b.net().get_params() == m0.net().get_params());
  const auto& w0 = std::get<crrr::DctmModel>(base.w_models[0]);
  const auto& w0b = std::get<crrr::DctmModel>(bumped.w_models[0]);
  CHECK(w0b.net().get_params() == w0.net().get_params());
}

TEST_CASE("continuous regression-baseline ranks land near the conditional truth",
          "[crossfit]") {
  const double latent = 0.5;
  auto data = make_continuous_pair(3000, latent, 0xFA59u);
  crrr::CrossfitConfig cfg;
  cfg.family = crrr::ModelFamily::dr;
  cfg.folds = 3;
  cfg.seed = 33;
  cfg.dr_thresholds = 16;

  const auto res = crrr::crossfit_ranks(data, cfg);
  REQUIRE(res.ranks.u_hat.size() == 3000);
  CHECK_FALSE(res.ranks.omega.has_value());
  for (std::size_t i = 0; i < res.ranks.u_hat.size(); ++i) {
    REQUIRE(res.ranks.u_hat[i] > 0.0);
    REQUIRE(res.ranks.u_hat[i] < 1.0);
    REQUIRE(res.ranks.v_hat[i] > 0.0);
    REQUIRE(res.ranks.v_hat[i] < 1.0);
  }
  // Out-of-fold conditional ranks are probability-integral transforms, hence
  // close to uniform when the model is adequate.
  double mu = 0.0, m2 = 0.0;
  for (const double u : res.ranks.u_hat) mu += u;
  mu /= double(res.ranks.u_hat.size());
  for (const double u : res.ranks.u_hat) m2 += (u - mu) * (u - mu);
  m2 /= double(res.ranks.u_hat.size());
  CHECK_THAT(mu, WithinAbs(0.5, 0.03));
  CHECK_THAT(m2, WithinAbs(1.0 / 12.0, 0.012));

  const double truth = 6.0 / M_PI * std::asin(latent / 2.0);
  CHECK_THAT(crrr::rho_ols(res.ranks), WithinAbs(truth, 0.08));
}

TEST_CASE("ordinal ranks track the marginal blend when covariates carry no signal",
          "[crossfit]") {
  auto data = make_ordinal_pair(1200, 0xFA5Au);
  crrr::CrossfitConfig cfg;
  cfg.family = crrr::ModelFamily::dr;
  cfg.folds = 3;
  cfg.seed = 7;
  cfg.omega = 0.5;

  const auto res = crrr::crossfit_ranks(data, cfg);
  REQUIRE(res.ranks.omega.has_value());
  CHECK(*res.ranks.omega == 0.5);

  std::vector<double> yv(data.y.data(), data.y.data() + data.n());
  const auto marg = crrr::marginal_ranks(yv, 0.5);
  double mean_abs = 0.0;
  for (std::size_t i = 0; i < marg.size(); ++i)
    mean_abs += std::abs(res.ranks.u_hat[i] - marg[i]);
  mean_abs /= double(marg.size());
  CHECK(mean_abs <= 0.05);
}

TEST_CASE("reblending fitted fold models reproduces and interpolates omega ranks",
          "[crossfit]") {
  auto data = make_ordinal_pair(400, 0xFA5Bu);
  crrr::CrossfitConfig cfg;
  cfg.family = crrr::ModelFamily::dr;
  cfg.folds = 3;
  cfg.seed = 9;
  cfg.omega = 0.5;

  const auto res = crrr::crossfit_ranks(data, cfg);
  const auto re_half = crrr::reblend_ranks(data, res, 0.5);
  CHECK(re_half.u_hat == res.ranks.u_hat);
  CHECK(re_half.v_hat == res.ranks.v_hat);

  const auto r0 = crrr::reblend_ranks(data, res, 0.0);
  const auto r1 = crrr::reblend_ranks(data, res, 1.0);
  const auto rq = crrr::reblend_ranks(data, res, 0.25);
  for (std::size_t i = 0; i < rq.u_hat.size(); ++i) {
    CHECK_THAT(rq.u_hat[i], WithinAbs(0.75 * r0.u_hat[i] + 0.25 * r1.u_hat[i], 1e-12));
    CHECK(r1.u_hat[i] > r0.u_hat[i]);  // observed category has positive mass
  }
}

TEST_CASE("ordinal network family produces valid deterministic ranks", "[crossfit]") {
  auto data = make_ordinal_pair(150, 0xFA5Cu);
  crrr::CrossfitConfig cfg;
  cfg.family = crrr::ModelFamily::ddctm;
  cfg.folds = 3;
  cfg.seed = 13;
  cfg.omega = 1.0;
  cfg.train = tiny_train();

  const auto res = crrr::crossfit_ranks(data, cfg);
  for (std::size_t i = 0; i < res.ranks.u_hat.size(); ++i) {
    REQUIRE(res.ranks.u_hat[i] >= 0.0);
    REQUIRE(res.ranks.u_hat[i] <= 1.0);
  }
  const auto rerun = crrr::crossfit_ranks(data, cfg);
  CHECK(rerun.ranks.u_hat == res.ranks.u_hat);
}

TEST_CASE("warm restarts reuse the fold plan and stay at the fitted optimum",
          "[crossfit]") {
  auto data = make_continuous_pair(300, 0.5, 0xFA5Du);
  crrr::CrossfitConfig cfg;
  cfg.family = crrr::ModelFamily::dr;
  cfg.folds = 3;
  cfg.seed = 17;
  cfg.dr_thresholds = 8;

  const auto cold = crrr::crossfit_ranks(data, cfg);
  auto cfg2 = cfg;
  cfg2.seed = 99;  // plan must come from the warm result, not this seed
  const auto warm = crrr::crossfit_ranks(data, cfg2, {}, &cold);
  CHECK(warm.plan.assignment == cold.plan.assignment);
  double worst = 0.0;
  for (std::size_t i = 0; i < warm.ranks.u_hat.size(); ++i) {
    worst = std::max(worst, std::abs(warm.ranks.u_hat[i] - cold.ranks.u_hat[i]));
    worst = std::max(worst, std::abs(warm.ranks.v_hat[i] - cold.ranks.v_hat[i]));
  }
  CHECK(worst <= 1e-6);

  const std::vector<double> ones(300, 1.0);
  const auto unit = crrr::crossfit_ranks(data, cfg);
  const auto weighted = crrr::crossfit_ranks(data, cfg, ones);
  CHECK(weighted.ranks.u_hat == unit.ranks.u_hat);
  CHECK(weighted.ranks.v_hat == unit.ranks.v_hat);
}

TEST_CASE("family and input validation", "[crossfit]") {
  auto cont = make_continuous_pair(60, 0.5, 0xFA5Eu);
  auto ord = make_ordinal_pair(60, 0xFA5Fu);

  crrr::CrossfitConfig cfg;
  cfg.folds = 3;
  cfg.train = tiny_train();

  cfg.family = crrr::ModelFamily::dctm;
  CHECK_THROWS_AS(crrr::crossfit_ranks(ord, cfg), std::invalid_argument);
  cfg.family = crrr::ModelFamily::ddctm;
  CHECK_THROWS_AS(crrr::crossfit_ranks(cont, cfg), std::invalid_argument);

  cfg.family = crrr::ModelFamily::dr;
  cfg.omega = 1.5;
  CHECK_THROWS_AS(crrr::crossfit_ranks(ord, cfg), std::invalid_argument);
  cfg.omega = 0.5;
  const std::vector<double> short_w(10, 1.0);
  CHECK_THROWS_AS(crrr::crossfit_ranks(ord, cfg, short_w), std::invalid_argument);

  CHECK(crrr::parse_family("dctm") == crrr::ModelFamily::dctm);
  CHECK(crrr::parse_family("ddctm") == crrr::ModelFamily::ddctm);
  CHECK(crrr::parse_family("dr") == crrr::ModelFamily::dr);
  CHECK_THROWS_AS(crrr::parse_family("mystery"), std::invalid_argument);
  CHECK(std::string(crrr::family_name(crrr::ModelFamily::ddctm)) == "ddctm");
}
