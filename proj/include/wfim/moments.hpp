#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "wfim/errors.hpp"
#include "wfim/model.hpp"
#include "wfim/state_space.hpp"

namespace wfim {

inline constexpr double kSigmaDegenerateTol = 1e-12;

// Mean and variance of w(t) = c' x(t).
inline std::pair<double, double> output_stats(const SensitivityRealization& real,
                                              const StateStatistics& stats) {
  const double gamma = real.c.dot(stats.eta);
  const double sigma = real.c.dot(stats.Sigma * real.c);
  if (sigma <= kSigmaDegenerateTol) {
    throw DegenerateError("output variance sigma = " + std::to_string(sigma) +
                          ": w is degenerate");
  }
  return {gamma, sigma};
}

// Non-central moment E{X^k}, X ~ Normal(gamma, sigma), via the two-term
// recurrence mu_k = gamma mu_{k-1} + (k-1) sigma mu_{k-2}.
inline double gaussian_moment(int k, double gamma, double sigma) {
  if (k < 0) throw DimensionError("moment order must be >= 0");
  if (sigma < 0.0) throw DegenerateError("variance must be >= 0");
  double prev = 1.0;  // mu_0
  if (k == 0) return prev;
  double cur = gamma;  // mu_1
  for (int j = 2; j <= k; ++j) {
    const double next = gamma * cur + (j - 1) * sigma * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

// Moment table mu_0..mu_2m, the Hankel moment matrix Lambda, the derivative
// coefficient vectors and the scalar beta = alpha2' Lambda alpha2.
struct MomentContext {
  double gamma = 0.0;
  double sigma = 0.0;
  VectorXd mu;       // mu_0..mu_2m
  MatrixXd Lambda;   // (m+1) x (m+1), Lambda(j,k) = mu_{j+k}
  VectorXd alpha1;
  VectorXd alpha2;
  double beta = 0.0;
};

inline MomentContext build_moment_context(const WienerModel& model, double gamma, double sigma) {
  if (sigma <= kSigmaDegenerateTol) {
    throw DegenerateError("sigma below degeneracy tolerance");
  }
  const int m = model.degree();
  MomentContext ctx;
  ctx.gamma = gamma;
  ctx.sigma = sigma;
  ctx.mu.resize(2 * m + 1);
  for (int k = 0; k <= 2 * m; ++k) ctx.mu(k) = gaussian_moment(k, gamma, sigma);
  ctx.Lambda.resize(m + 1, m + 1);
  for (int j = 0; j <= m; ++j) {
    for (int k = 0; k <= m; ++k) ctx.Lambda(j, k) = ctx.mu(j + k);
  }
  ctx.alpha1 = model.alpha1();
  ctx.alpha2 = model.alpha2();
  if (ctx.alpha2.cwiseAbs().maxCoeff() == 0.0) {
    throw DegenerateError("constant nonlinearity derivative: alpha2 = 0");
  }
  ctx.beta = ctx.alpha2.dot(ctx.Lambda * ctx.alpha2);
  return ctx;
}

}  // namespace wfim
