#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "wfim/errors.hpp"
#include "wfim/model.hpp"
#include "wfim/moments.hpp"
#include "wfim/state_space.hpp"

namespace wfim {

inline constexpr double kDetFloor = 1e-300;
inline constexpr double kLambdaCondLimit = 1e14;

struct FimResult {
  MatrixXd J;    // (m+d) x (m+d)
  MatrixXd J11;  // m x m
  MatrixXd J21;  // d x m
  MatrixXd J22;  // d x d
  double det_direct = 0.0;
  double det_factored = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  double f = 0.0;
  double beta = 0.0;
  bool identifiable = false;
};

namespace detail {

struct FimWork {
  MatrixXd Q;   // 2x2
  MatrixXd F;   // dx2
  MatrixXd H;   // 2x2
  MatrixXd L1;  // mx(m+1)
  MatrixXd L2;  // 2x(m+1)
};

inline FimWork fim_work(const WienerModel& model, const SensitivityRealization& real,
                        const StateStatistics& stats, const MomentContext& ctx) {
  FimWork w;
  w.Q.resize(2, 2);
  w.Q << 1.0 / ctx.sigma, -ctx.gamma / ctx.sigma, 0.0, 1.0;
  w.F.resize(real.dim, 2);
  w.F.col(0) = stats.Sigma * real.c;
  w.F.col(1) = stats.eta;
  w.H = MatrixXd::Zero(2, 2);
  w.H(0, 0) = ctx.beta * ctx.sigma;
  const auto maps = build_constraint_maps(model.constraint, model.degree());
  w.L1 = maps.L1();
  w.L2.resize(2, model.degree() + 1);
  w.L2.row(0) = ctx.alpha1.transpose();
  w.L2.row(1) = ctx.alpha2.transpose();
  return w;
}

// (r1, r2) with r_i = alpha_i' upsilon * (upsilon' Lambda^-1 upsilon)^(-1/2).
inline std::pair<double, double> r_scalars(const WienerModel& model, const MomentContext& ctx) {
  const VectorXd& ups = model.constraint.upsilon;
  Eigen::LDLT<MatrixXd> ldlt(ctx.Lambda);
  if (ldlt.info() != Eigen::Success) {
    throw ConditioningError("moment matrix Lambda is numerically singular");
  }
  const VectorXd x = ldlt.solve(ups);
  const double resid = (ctx.Lambda * x - ups).norm();
  if (resid > 1e-6 * ups.norm() || ldlt.vectorD().minCoeff() <= 0.0) {
    throw ConditioningError("ill-conditioned Lambda: solve residual " + std::to_string(resid));
  }
  const double quad = ups.dot(x);
  const double scale = 1.0 / std::sqrt(quad);
  return {ctx.alpha1.dot(ups) * scale, ctx.alpha2.dot(ups) * scale};
}

}  // namespace detail

inline FimResult assemble_fim(const WienerModel& model, const SensitivityRealization& real,
                              const StateStatistics& stats, const MomentContext& ctx) {
  const int m = model.degree();
  const int d = real.dim;
  const auto w = detail::fim_work(model, real, stats, ctx);

  FimResult res;
  res.beta = ctx.beta;
  res.J11 = w.L1 * ctx.Lambda * w.L1.transpose();
  const MatrixXd FQ = w.F * w.Q;
  res.J21 = FQ * w.L2 * ctx.Lambda * w.L1.transpose();
  res.J22 = FQ * (w.L2 * ctx.Lambda * w.L2.transpose() - w.H) * FQ.transpose() +
            ctx.beta * stats.Sigma;

  res.J.resize(m + d, m + d);
  res.J.topLeftCorner(m, m) = res.J11;
  res.J.bottomLeftCorner(d, m) = res.J21;
  res.J.topRightCorner(m, d) = res.J21.transpose();
  res.J.bottomRightCorner(d, d) = res.J22;
  res.J = (0.5 * (res.J + res.J.transpose())).eval();

  res.det_direct = res.J.determinant();
  auto [r1, r2] = detail::r_scalars(model, ctx);
  res.r1 = r1;
  res.r2 = r2;
  res.f = std::pow(ctx.beta, d - 1) * r1 * r1 * res.J11.determinant() / ctx.sigma;
  res.det_factored = res.f * stats.Sigma.determinant();
  res.identifiable = check_identifiability(model).identifiable;
  return res;
}

struct DeterminantResult {
  double det_factored = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  double f = 0.0;
};

// Determinant via the factorization f * det(Sigma), no full assembly.
inline DeterminantResult fim_determinant(const WienerModel& model,
                                         const SensitivityRealization& real,
                                         const StateStatistics& stats,
                                         const MomentContext& ctx) {
  DeterminantResult res;
  auto [r1, r2] = detail::r_scalars(model, ctx);
  res.r1 = r1;
  res.r2 = r2;
  const auto maps = build_constraint_maps(model.constraint, model.degree());
  const MatrixXd L1 = maps.L1();
  const double detJ11 = (L1 * ctx.Lambda * L1.transpose()).determinant();
  res.f = std::pow(ctx.beta, real.dim - 1) * r1 * r1 * detJ11 / ctx.sigma;
  res.det_factored = res.f * stats.Sigma.determinant();
  return res;
}

inline double relative_det_gap(double det_a, double det_b) {
  return std::abs(det_a - det_b) /
         std::max({std::abs(det_a), std::abs(det_b), kDetFloor});
}

struct SchurReport {
  double residual_schur = 0.0;    // assembled vs. closed-form Schur complement
  double residual_det = 0.0;      // determinant identity, either branch
  double residual_inverse = 0.0;  // explicit inverse formula (r2 != 0 only)
  bool r2_zero_branch = false;
};

inline SchurReport schur_consistency(const WienerModel& model,
                                     const SensitivityRealization& real,
                                     const StateStatistics& stats,
                                     const MomentContext& ctx,
                                     double r2_tol = 1e-10) {
  const auto res = assemble_fim(model, real, stats, ctx);
  const auto w = detail::fim_work(model, real, stats, ctx);
  const int d = real.dim;

  const MatrixXd S =
      res.J22 - res.J21 * res.J11.ldlt().solve(res.J21.transpose());

  // Closed form: beta Sigma + F Q [L2 ups (ups' Lambda^-1 ups)^-1 ups' L2' - H] Q' F'.
  const VectorXd& ups = model.constraint.upsilon;
  const VectorXd lx = ctx.Lambda.ldlt().solve(ups);
  const double quad = ups.dot(lx);
  const VectorXd L2u = w.L2 * ups;
  const MatrixXd FQ = w.F * w.Q;
  const MatrixXd S_closed = ctx.beta * stats.Sigma +
                            FQ * (L2u * L2u.transpose() / quad - w.H) * FQ.transpose();

  SchurReport rep;
  rep.residual_schur = (S - S_closed).norm() / std::max(S.norm(), kDetFloor);
  rep.r2_zero_branch = std::abs(res.r2) <= r2_tol * std::max(1.0, std::abs(res.r1));

  const double det_closed =
      res.r1 * res.r1 / (ctx.beta * ctx.sigma) * (ctx.beta * stats.Sigma).determinant();
  rep.residual_det = relative_det_gap(S.determinant(), det_closed);

  if (!rep.r2_zero_branch) {
    const double coef =
        1.0 / (res.r1 * res.r1) -
        std::pow(res.r2 * ctx.gamma / res.r1 - 1.0, 2) / (ctx.beta * ctx.sigma);
    const MatrixXd Mfac =
        (res.r2 / res.r1) * real.c * stats.eta.transpose() - MatrixXd::Identity(d, d);
    const MatrixXd Sinv =
        coef * real.c * real.c.transpose() +
        Mfac * (ctx.beta * stats.Sigma).ldlt().solve(Mfac.transpose());
    rep.residual_inverse = (S * Sinv - MatrixXd::Identity(d, d)).norm() / std::sqrt(double(d));
  }

  // det(J) = det(J11) det(S) must tie the pieces together.
  rep.residual_det = std::max(
      rep.residual_det,
      relative_det_gap(res.det_direct, res.J11.determinant() * S.determinant()));
  return rep;
}

}  // namespace wfim
