#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "wfim/errors.hpp"
#include "wfim/fim.hpp"
#include "wfim/model.hpp"
#include "wfim/moments.hpp"
#include "wfim/state_space.hpp"

namespace wfim {

// The w-dependent determinant factor f(gamma, sigma) = beta^(d-1) r1^2 det(J11) / sigma.
// Depends on the model and the output statistics only, never on the full Sigma.
inline double f_factor(const WienerModel& model, double gamma, double sigma) {
  const auto ctx = build_moment_context(model, gamma, sigma);
  auto [r1, r2] = detail::r_scalars(model, ctx);
  (void)r2;
  const MatrixXd L1 = build_constraint_maps(model.constraint, model.degree()).L1();
  const double detJ11 = (L1 * ctx.Lambda * L1.transpose()).determinant();
  const int d = model.linear.fir ? model.linear.order() + 1 : 2 * model.linear.order() + 1;
  return std::pow(ctx.beta, d - 1) * r1 * r1 * detJ11 / sigma;
}

struct ScanRow {
  double s = 0.0;
  double sigma = 0.0;
  double gamma = 0.0;
  double f = 0.0;
  double det_sigma = 0.0;
  double det_J = 0.0;
  double input_power = 0.0;
  bool feasible = false;
};

struct ScanResult {
  std::vector<ScanRow> rows;
  int argmax = -1;  // index into rows, feasible rows only
  double budget = 0.0;
};

// One-dimensional D-optimal sweep: scale the input covariance contribution by
// each s (mean fixed), so Sigma -> s Sigma_cov and sigma -> s sigma_cov.
inline ScanResult scan_sigma(const WienerModel& model, const GaussianInputSpec& base_input,
                             const std::vector<double>& scales, double budget) {
  if (scales.empty()) throw ConfigError("scan needs at least one scale");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (scales[i] <= 0.0) throw ConfigError("scales must be positive");
    if (i > 0 && scales[i] <= scales[i - 1]) throw ConfigError("scales must be ascending");
  }
  const auto real = build_sensitivity_realization(model.linear);
  const auto base_stats = state_statistics(real, base_input);
  const auto [gamma, sigma_base] = output_stats(real, base_stats);

  // Budget measure: scaled input variance (white/shaped); for a direct Sigma
  // the input is unspecified, fall back to the output variance of w.
  double base_power;
  if (base_input.kind == GaussianInputSpec::Kind::Direct) {
    base_power = sigma_base;
  } else {
    base_power = input_variance(base_input);
  }

  ScanResult result;
  result.budget = budget;
  double best = -std::numeric_limits<double>::infinity();
  for (const double s : scales) {
    ScanRow row;
    row.s = s;
    row.gamma = gamma;
    row.sigma = s * sigma_base;
    row.input_power = s * base_power;
    row.f = f_factor(model, gamma, row.sigma);
    row.det_sigma = (s * base_stats.Sigma).determinant();
    row.det_J = row.f * row.det_sigma;
    row.feasible = row.input_power <= budget;
    if (row.feasible && row.det_J > best) {
      best = row.det_J;
      result.argmax = static_cast<int>(result.rows.size());
    }
    result.rows.push_back(row);
  }
  if (result.argmax < 0) throw BudgetError("no scan row satisfies the power budget");
  return result;
}

}  // namespace wfim
