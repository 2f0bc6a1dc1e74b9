#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "crrr/dgp.hpp"
#include "crrr/report.hpp"
#include "crrr/rng.hpp"
#include "crrr/truth.hpp"

namespace {

// Gaussian-copula test bed: a binary covariate optionally shifts both
// outcome means, the latent pair has a fixed normal correlation, and a second
// noise covariate varies within every subgroup. The within-group rank
// correlation has the closed form used all over the project.
crrr::Dataset copula_data(std::size_t n, double shift, double rho_z, std::uint64_t seed) {
  crrr::RngStream rng(seed);
  crrr::Dataset d;
  d.y.resize(static_cast<Eigen::Index>(n));
  d.w.resize(static_cast<Eigen::Index>(n));
  d.x.resize(static_cast<Eigen::Index>(n), 2);
  const double mix = std::sqrt(1.0 - rho_z * rho_z);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double x1 = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const double x2 = rng.uniform(-1.0, 1.0);
    const double z1 = rng.normal();
    const double z2 = rho_z * z1 + mix * rng.normal();
    d.y[r] = shift * x1 + z1;
    d.w[r] = shift * x1 + z2;
    d.x(r, 0) = x1;
    d.x(r, 1) = x2;
  }
  d.x_names = {"x1", "x2"};
  return d;
}

double copula_truth(double rho_z) {
  return (6.0 / std::numbers::pi) * std::asin(rho_z / 2.0);
}

crrr::MobilityConfig dr_config(std::uint64_t seed) {
  crrr::MobilityConfig cfg;
  cfg.crossfit.family = crrr::ModelFamily::dr;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("mobility report separates conditional and marginal association", "[slow]") {
  // The latent correlation is chosen so the conditional rank correlation is
  // 0.2; the mean shift adds a between-group component on top.
  const double rho_z = 2.0 * std::sin(0.2 * std::numbers::pi / 6.0);
  const crrr::Dataset data = copula_data(3000, 1.6, rho_z, 424);

  const crrr::MobilityReport rep = crrr::mobility_report(data, {}, dr_config(31));
  REQUIRE(rep.blocks.size() == 1);
  CHECK_FALSE(rep.blocks[0].omega.has_value());
  REQUIRE(rep.blocks[0].rows.size() == 1);
  const crrr::MobilityRow& all = rep.blocks[0].rows[0];
  CHECK(all.label == "all");
  CHECK(all.n == 3000);
  CHECK(all.estimated);
  CHECK_FALSE(all.inference.has_value());

  CHECK_THAT(all.estimate.rho_ols, Catch::Matchers::WithinAbs(0.2, 0.03));
  CHECK_THAT(all.estimate.rho_corr, Catch::Matchers::WithinAbs(0.2, 0.03));
  // The shared shift pushes the marginal slope well above the conditional one.
  CHECK(all.estimate.rrr_slope > all.estimate.rho_ols + 0.1);
  CHECK_THAT(all.estimate.rrr_slope - all.estimate.rho_ols,
             Catch::Matchers::WithinAbs(all.estimate.between_component, 1e-12));

  // With no shift the covariates carry no association: the two slopes agree.
  const crrr::Dataset flat = copula_data(3000, 0.0, rho_z, 425);
  const crrr::MobilityReport frep = crrr::mobility_report(flat, {}, dr_config(32));
  const crrr::MobilityRow& frow = frep.blocks[0].rows[0];
  CHECK_THAT(frow.estimate.rrr_slope, Catch::Matchers::WithinAbs(frow.estimate.rho_ols, 0.02));

  // Transition matrix rows are distributions over child deciles.
  REQUIRE(rep.transition.has_value());
  CHECK(rep.transition->q == 10);
  for (int i = 0; i < 10; ++i) {
    long double s = 0.0L;
    for (int j = 0; j < 10; ++j) s += rep.transition->p(i, j);
    CHECK_THAT(static_cast<double>(s), Catch::Matchers::WithinAbs(1.0, 1e-10));
  }
}

TEST_CASE("mobility report handles subgroups by size", "[slow]") {
  const double rho_z = 0.5;
  crrr::Dataset data = copula_data(600, 0.8, rho_z, 77);

  std::vector<crrr::NamedMask> groups(3);
  groups[0].name = "wide";
  groups[1].name = "narrow";
  groups[2].name = "sliver";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    groups[0].mask.push_back(i % 2 == 0 ? 1 : 0);  // 300 rows
    groups[1].mask.push_back(i < 60 ? 1 : 0);      // 60 rows
    groups[2].mask.push_back(i < 10 ? 1 : 0);      // 10 rows
  }

  crrr::MobilityConfig cfg = dr_config(99);
  cfg.bootstrap_draws = 30;
  const crrr::MobilityReport rep = crrr::mobility_report(data, groups, cfg);
  REQUIRE(rep.blocks.size() == 1);
  REQUIRE(rep.blocks[0].rows.size() == 4);

  const crrr::MobilityRow& all = rep.blocks[0].rows[0];
  CHECK(all.estimated);
  REQUIRE(all.inference.has_value());
  CHECK(all.inference->draws == 30);
  CHECK(all.inference->ols.inference.se > 0.0);
  CHECK(all.estimate.se.has_value());
  CHECK(*all.estimate.se == all.inference->ols.inference.se);
  CHECK(all.inference->ols.inference.aci.first <= all.estimate.rho_ols);
  CHECK(all.inference->ols.inference.aci.second >= all.estimate.rho_ols);
  // The studentized interval is symmetric around the point estimate.
  CHECK_THAT(all.inference->ols.inference.aci.second - all.estimate.rho_ols,
             Catch::Matchers::WithinAbs(
                 all.estimate.rho_ols - all.inference->ols.inference.aci.first, 1e-12));

  const crrr::MobilityRow& wide = rep.blocks[0].rows[1];
  CHECK(wide.label == "wide");
  CHECK(wide.n == 300);
  CHECK(wide.estimated);
  CHECK_FALSE(wide.below_min);
  CHECK(wide.inference.has_value());

  const crrr::MobilityRow& narrow = rep.blocks[0].rows[2];
  CHECK(narrow.n == 60);
  CHECK(narrow.below_min);
  CHECK(narrow.estimated);  // point estimate still reported
  CHECK_FALSE(narrow.inference.has_value());

  const crrr::MobilityRow& sliver = rep.blocks[0].rows[3];
  CHECK(sliver.n == 10);
  CHECK_FALSE(sliver.estimated);
  CHECK(sliver.error == "too few rows to fit");

  std::vector<crrr::NamedMask> bad(1);
  bad[0].name = "short";
  bad[0].mask = {1, 0, 1};
  CHECK_THROWS_AS(crrr::mobility_report(data, bad, cfg), std::invalid_argument);
}

TEST_CASE("ordinal outcomes produce one block per omega", "[slow]") {
  // Asymmetric bins (binary parent) so the tie parameter has real leverage;
  // symmetric bins on both sides make the curve nearly flat.
  crrr::Dataset data = copula_data(1500, 1.0, 0.5, 11);
  const std::vector<double> cuts_y{-0.5, 0.5, 1.5};
  const std::vector<double> cuts_w{0.8};
  data = crrr::discretize_outcomes(std::move(data), cuts_y, cuts_w);

  crrr::MobilityConfig cfg = dr_config(7);
  cfg.omegas = {0.0, 0.5, 1.0};
  const crrr::MobilityReport rep = crrr::mobility_report(data, {}, cfg);
  REQUIRE(rep.blocks.size() == 3);
  CHECK(rep.blocks[0].omega == 0.0);
  CHECK(rep.blocks[1].omega == 0.5);
  CHECK(rep.blocks[2].omega == 1.0);
  for (const crrr::MobilityBlock& block : rep.blocks) {
    REQUIRE(block.rows.size() == 1);
    const crrr::MobilityRow& row = block.rows[0];
    CHECK(row.estimated);
    CHECK(row.estimate.omega == block.omega);
    CHECK_THAT(row.estimate.rrr_slope - row.estimate.rho_ols,
               Catch::Matchers::WithinAbs(row.estimate.between_component, 1e-12));
  }
  // With four categories the tie parameter genuinely moves the estimate.
  CHECK(std::fabs(rep.blocks[0].rows[0].estimate.rho_ols -
                  rep.blocks[1].rows[0].estimate.rho_ols) > 0.01);

  cfg.omegas = {1.5};
  CHECK_THROWS_AS(crrr::mobility_report(data, {}, cfg), std::invalid_argument);
  cfg.omegas = {};
  CHECK_THROWS_AS(crrr::mobility_report(data, {}, cfg), std::invalid_argument);
}

TEST_CASE("continuous outcomes collapse the omega list to one block") {
  const crrr::Dataset data = copula_data(400, 0.5, 0.4, 5);
  crrr::MobilityConfig cfg = dr_config(3);
  cfg.omegas = {0.0, 0.5, 1.0};
  const crrr::MobilityReport rep = crrr::mobility_report(data, {}, cfg);
  REQUIRE(rep.blocks.size() == 1);

  cfg.omegas = {0.25};
  const crrr::MobilityReport rep2 = crrr::mobility_report(data, {}, cfg);
  CHECK(crrr::mobility_report_to_json(rep).dump() ==
        crrr::mobility_report_to_json(rep2).dump());
}

TEST_CASE("mobility reports are deterministic", "[slow]") {
  const crrr::Dataset data = copula_data(500, 1.0, 0.5, 21);
  std::vector<crrr::NamedMask> groups(1);
  groups[0].name = "half";
  for (Eigen::Index i = 0; i < data.n(); ++i)
    groups[0].mask.push_back(i % 2 == 0 ? 1 : 0);

  crrr::MobilityConfig cfg = dr_config(1234);
  cfg.bootstrap_draws = 12;
  const std::string a =
      crrr::mobility_report_to_json(crrr::mobility_report(data, groups, cfg)).dump(2);
  const std::string b =
      crrr::mobility_report_to_json(crrr::mobility_report(data, groups, cfg)).dump(2);
  CHECK(a == b);

  cfg.seed = 4321;
  const std::string c =
      crrr::mobility_report_to_json(crrr::mobility_report(data, groups, cfg)).dump(2);
  CHECK(a != c);

  // Small samples skip the transition matrix rather than emit junk.
  const crrr::Dataset tiny = copula_data(80, 0.0, 0.4, 2);
  const crrr::MobilityReport trep = crrr::mobility_report(tiny, {}, dr_config(1));
  CHECK_FALSE(trep.transition.has_value());
}
