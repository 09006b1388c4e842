#include <doctest.h>

#include <random>
#include <vector>

#include "oracles.hpp"
#include "wfim/design.hpp"

using namespace wfim;

namespace {

WienerModel linear_fir0_model(double g0) {
  LinearParams lin;
  lin.fir = true;
  lin.g.resize(0);
  lin.g0 = g0;
  NormalizationConstraint c;
  c.upsilon = Eigen::Vector2d(0, 1);
  c.ell = 1;
  c.order = NormalizationConstraint::default_order(1, 1);
  return make_model(lin, NonlinearParams{Eigen::Vector2d(0.3, 1)}, c);
}

}  // namespace

TEST_CASE("f_factor: FIR n=0 linear case gives f = 1 for all sigma") {
  const auto model = linear_fir0_model(1.2);
  for (const double sigma : {0.1, 1.0, 7.5}) {
    CHECK(f_factor(model, 0.4, sigma) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("f_factor: upsilon = e0 gives f = 0") {
  LinearParams lin{Eigen::VectorXd::Constant(1, 0.4), Eigen::VectorXd::Constant(1, 1.0), 0.1,
                   false};
  NormalizationConstraint c;
  c.upsilon = Eigen::Vector3d(1, 0, 0);
  c.ell = 0;
  c.order = NormalizationConstraint::default_order(2, 0);
  const auto model = make_model(lin, NonlinearParams{Eigen::Vector3d(1, 0.5, 0.2)}, c);
  for (const double sigma : {0.5, 2.0}) {
    CHECK(f_factor(model, 0.3, sigma) == doctest::Approx(0.0));
  }
}

TEST_CASE("f is w-dependent: matched (gamma, sigma) under different spectra") {
  std::mt19937_64 rng(83);
  const auto model = oracles::random_model(rng, 2, 3);
  const auto real = build_sensitivity_realization(model.linear);
  const double eta_u = 0.5;
  const auto white = GaussianInputSpec::white(eta_u, 1.0);
  const auto stats_w = state_statistics(real, white);
  const auto [gamma_w, sigma_w] = output_stats(real, stats_w);

  // Scale an FIR shaping filter so the output variance matches exactly.
  VectorXd num(2), den(1);
  num << 1.0, 0.7;
  den << 1.0;
  auto shaped = GaussianInputSpec::shaped(eta_u, num, den);
  const auto stats_probe = state_statistics(real, shaped);
  const auto [gamma_p, sigma_p] = output_stats(real, stats_probe);
  shaped.shaping_num *= std::sqrt(sigma_w / sigma_p);
  const auto stats_s = state_statistics(real, shaped);
  const auto [gamma_s, sigma_s] = output_stats(real, stats_s);

  CHECK(gamma_s == doctest::Approx(gamma_w).epsilon(1e-12));
  CHECK(sigma_s == doctest::Approx(sigma_w).epsilon(1e-10));
  const double f_w = f_factor(model, gamma_w, sigma_w);
  const double f_s = f_factor(model, gamma_s, sigma_s);
  CHECK(std::abs(f_w - f_s) < 1e-10 * std::abs(f_w));
  // ... while the state covariances genuinely differ.
  CHECK((stats_w.Sigma - stats_s.Sigma).norm() > 0.1 * stats_w.Sigma.norm());
}

TEST_CASE("J11 depends only on (gamma, sigma, constraint)") {
  std::mt19937_64 rng(89);
  const auto model = oracles::random_model(rng, 2, 2);
  const MatrixXd L1 = build_constraint_maps(model.constraint, 2).L1();
  const auto ctx_a = build_moment_context(model, 0.7, 1.3);
  const auto ctx_b = build_moment_context(model, 0.7, 1.3);
  CHECK(((L1 * ctx_a.Lambda * L1.transpose()) - (L1 * ctx_b.Lambda * L1.transpose())).norm() ==
        0.0);
}

TEST_CASE("scan_sigma over a linear model") {
  const auto model = linear_fir0_model(1.0);
  const auto base = GaussianInputSpec::white(0.4, 1.0);
  const std::vector<double> scales{0.1, 0.5, 1.0, 2.0, 5.0, 10.0};

  SUBCASE("monotone det(J), argmax at the budget boundary") {
    const auto result = scan_sigma(model, base, scales, 10.0);
    for (std::size_t i = 1; i < result.rows.size(); ++i) {
      CHECK(result.rows[i].det_J > result.rows[i - 1].det_J);
      CHECK(result.rows[i].sigma > result.rows[i - 1].sigma);
    }
    CHECK(result.argmax == 5);
    CHECK(result.rows[5].s == 10.0);
  }
  SUBCASE("budget excludes high-power rows from argmax") {
    const auto result = scan_sigma(model, base, scales, 2.0);
    CHECK(result.argmax == 3);
    CHECK_FALSE(result.rows[5].feasible);
  }
  SUBCASE("empty feasible set") {
    CHECK_THROWS_AS(scan_sigma(model, base, scales, 0.01), BudgetError);
  }
  SUBCASE("bad scales rejected") {
    CHECK_THROWS_AS(scan_sigma(model, base, {1.0, 0.5}, 10.0), ConfigError);
    CHECK_THROWS_AS(scan_sigma(model, base, {-1.0}, 10.0), ConfigError);
  }
}

TEST_CASE("scan rows satisfy det(J) = f det(Sigma) against full assembly") {
  std::mt19937_64 rng(97);
  const auto model = oracles::random_model(rng, 2, 3);
  const auto real = build_sensitivity_realization(model.linear);
  const auto base = GaussianInputSpec::white(0.6, 0.8);
  const std::vector<double> scales{0.25, 0.7, 1.0, 1.9, 4.2};
  const auto result = scan_sigma(model, base, scales, 100.0);
  for (const auto& row : result.rows) {
    CHECK(row.det_J == doctest::Approx(row.f * row.det_sigma).epsilon(1e-12));
    const auto stats = state_statistics(real, base.scaled(row.s));
    const auto [gamma, sigma] = output_stats(real, stats);
    CHECK(sigma == doctest::Approx(row.sigma).epsilon(1e-10));
    const auto ctx = build_moment_context(model, gamma, sigma);
    const auto res = assemble_fim(model, real, stats, ctx);
    CHECK(relative_det_gap(res.det_direct, row.det_J) < 1e-8);
  }
}
