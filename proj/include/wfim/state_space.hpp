#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>

#include "wfim/errors.hpp"
#include "wfim/model.hpp"

namespace wfim {

inline constexpr double kSigmaPdTol = 1e-10;

// Controllable canonical pair (A1, b1) of the denominator.
inline std::pair<MatrixXd, VectorXd> build_canonical(const VectorXd& a) {
  const int n = static_cast<int>(a.size());
  if (n < 1) throw DimensionError("canonical form needs n >= 1");
  MatrixXd A1 = MatrixXd::Zero(n, n);
  A1.row(0) = -a.transpose();
  if (n > 1) A1.block(1, 0, n - 1, n - 1).setIdentity();
  VectorXd b1 = VectorXd::Zero(n);
  b1(0) = 1.0;
  return {A1, b1};
}

// Realization whose state x(t) = A x(t-1) + b u(t) carries dG/dtheta:
// x(t) = dw(t)/dtheta and w(t) = c' x(t).
struct SensitivityRealization {
  MatrixXd A;
  VectorXd b;
  VectorXd c;
  MatrixXd Cbar;
  int dim = 0;
};

inline SensitivityRealization build_sensitivity_realization(const LinearParams& lin) {
  validate(lin);
  SensitivityRealization real;
  const int n = lin.order();
  if (lin.fir) {
    const int d = n + 1;
    real.dim = d;
    // State is (u(t-1), ..., u(t-n), u(t)) so that x = dw/dtheta with
    // theta = (g1..gn, g0).
    real.A = MatrixXd::Zero(d, d);
    if (n >= 1) real.A(0, d - 1) = 1.0;
    for (int i = 1; i < n; ++i) real.A(i, i - 1) = 1.0;
    real.b = VectorXd::Zero(d);
    real.b(d - 1) = 1.0;
    real.c = lin.theta();
    real.Cbar = MatrixXd::Identity(d, d);
    return real;
  }
  const int d = 2 * n + 1;
  auto [A1, b1] = build_canonical(lin.a);
  MatrixXd Cbar = MatrixXd::Identity(d, d);
  Cbar.block(0, n, n, n) = -lin.g0 * MatrixXd::Identity(n, n);
  Cbar.block(2 * n, n, 1, n) = -lin.a.transpose();
  MatrixXd M = MatrixXd::Zero(d, d);
  M.topLeftCorner(n, n) = A1;
  M.block(0, n, n, n) = -b1 * (lin.g - lin.a * lin.g0).transpose();
  M.block(n, n, n, n) = A1;
  M.block(n, 2 * n, n, 1) = b1;
  real.dim = d;
  real.A = Cbar * M * Cbar.inverse();
  real.b = VectorXd::Zero(d);
  real.b(d - 1) = 1.0;
  real.c = VectorXd::Zero(d);
  real.c.segment(n, n) = lin.g;
  real.c(d - 1) = lin.g0;
  real.Cbar = Cbar;
  return real;
}

// G(z) from the coefficient form, usable at any complex z off the poles.
inline std::complex<double> transfer_function(const LinearParams& lin, std::complex<double> z) {
  const int n = lin.order();
  std::complex<double> num = lin.g0, den = 1.0, zi = 1.0;
  for (int i = 1; i <= n; ++i) {
    zi /= z;
    num += lin.g(i - 1) * zi;
    if (!lin.fir) den += lin.a(i - 1) * zi;
  }
  return num / den;
}

// dG/dtheta from the coefficient form, used as an oracle against the
// realization identity dG/dtheta = (I - A z^-1)^-1 b.
inline Eigen::VectorXcd transfer_gradient(const LinearParams& lin, std::complex<double> z) {
  const int n = lin.order();
  Eigen::VectorXcd grad(lin.theta_dim());
  std::complex<double> num = lin.g0, den = 1.0, zi = 1.0;
  Eigen::VectorXcd zpow(n + 1);
  zpow(0) = 1.0;
  for (int i = 1; i <= n; ++i) {
    zi /= z;
    zpow(i) = zi;
    num += lin.g(i - 1) * zi;
    if (!lin.fir) den += lin.a(i - 1) * zi;
  }
  const std::complex<double> G = num / den;
  for (int i = 1; i <= n; ++i) {
    if (!lin.fir) grad(i - 1) = -G * zpow(i) / den;
    grad((lin.fir ? 0 : n) + i - 1) = zpow(i) / den;
  }
  grad(grad.size() - 1) = 1.0 / den;
  return grad;
}

// Second-order description of the Gaussian input process.
struct GaussianInputSpec {
  enum class Kind { White, Shaped, Direct };
  Kind kind = Kind::White;
  double mean = 0.0;
  double variance = 1.0;  // white noise variance lambda
  VectorXd shaping_num;   // h0..hp of the shaping filter H
  VectorXd shaping_den;   // 1, p1..pq (leading 1 required)
  MatrixXd sigma_direct;  // stationary state covariance, given directly

  static GaussianInputSpec white(double mean, double lambda) {
    GaussianInputSpec s;
    s.kind = Kind::White;
    s.mean = mean;
    s.variance = lambda;
    return s;
  }
  static GaussianInputSpec shaped(double mean, VectorXd num, VectorXd den) {
    GaussianInputSpec s;
    s.kind = Kind::Shaped;
    s.mean = mean;
    s.shaping_num = std::move(num);
    s.shaping_den = std::move(den);
    return s;
  }
  static GaussianInputSpec direct(double mean, MatrixXd sigma) {
    GaussianInputSpec s;
    s.kind = Kind::Direct;
    s.mean = mean;
    s.sigma_direct = std::move(sigma);
    return s;
  }

  // Copy with the zero-mean covariance contribution scaled by s.
  GaussianInputSpec scaled(double s) const {
    GaussianInputSpec out = *this;
    switch (kind) {
      case Kind::White:
        out.variance *= s;
        break;
      case Kind::Shaped:
        out.shaping_num *= std::sqrt(s);
        break;
      case Kind::Direct:
        out.sigma_direct *= s;
        break;
    }
    return out;
  }
};

// Shaping filter as (Ah, bh, ch, h0): utilde(t) = ch' xh(t-1) + h0 e(t).
struct ShapingRealization {
  MatrixXd Ah;
  VectorXd bh;
  VectorXd ch;
  double h0 = 0.0;
  int dim = 0;
};

inline ShapingRealization build_shaping(const GaussianInputSpec& input) {
  if (input.shaping_num.size() == 0) throw ConfigError("shaped input needs numerator coefficients");
  if (input.shaping_den.size() == 0 || input.shaping_den(0) != 1.0) {
    throw ConfigError("shaping denominator must start with 1");
  }
  const int q = static_cast<int>(input.shaping_den.size()) - 1;
  const int p = static_cast<int>(input.shaping_num.size()) - 1;
  const int nh = std::max(p, q);
  if (nh == 0) {
    ShapingRealization sr;
    sr.h0 = input.shaping_num(0);
    sr.dim = 0;
    if (sr.h0 == 0.0) throw ConfigError("shaping filter is identically zero");
    return sr;
  }
  VectorXd den = VectorXd::Zero(nh);
  den.head(q) = input.shaping_den.tail(q);
  VectorXd num = VectorXd::Zero(nh);
  num.head(p) = input.shaping_num.tail(p);
  const double h0 = input.shaping_num(0);
  const double rho = denominator_spectral_radius(den);
  if (rho >= 1.0 - kStabilityMargin) throw StabilityError("shaping filter unstable");
  ShapingRealization sr;
  auto [Ah, bh] = build_canonical(den);
  sr.Ah = Ah;
  sr.bh = bh;
  sr.ch = num - den * h0;
  sr.h0 = h0;
  sr.dim = nh;
  if (sr.h0 == 0.0 && sr.ch.cwiseAbs().maxCoeff() == 0.0) {
    throw ConfigError("shaping filter is identically zero");
  }
  return sr;
}

// Stationary variance of the shaped input (unit-variance driving noise).
inline double input_variance(const GaussianInputSpec& input);

// Solves X = A X A' + W by the vectorized linear system; fine for d^2 <= ~200.
inline MatrixXd solve_discrete_lyapunov(const MatrixXd& A, const MatrixXd& W) {
  const int d = static_cast<int>(A.rows());
  if (A.cols() != d || W.rows() != d || W.cols() != d) {
    throw DimensionError("Lyapunov solve needs square matrices of equal size");
  }
  const double rho = A.eigenvalues().cwiseAbs().maxCoeff();
  if (rho >= 1.0 - kStabilityMargin) {
    throw StabilityError("Lyapunov: spectral radius " + std::to_string(rho));
  }
  // I - kron(A, A), column-major vec convention.
  MatrixXd K = MatrixXd::Identity(d * d, d * d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) {
      K.block(i * d, j * d, d, d) -= A(i, j) * A;
    }
  }
  Eigen::VectorXd vecW = Eigen::Map<const VectorXd>(W.data(), d * d);
  VectorXd vecX = K.partialPivLu().solve(vecW);
  MatrixXd X = Eigen::Map<const MatrixXd>(vecX.data(), d, d);
  return 0.5 * (X + X.transpose());
}

struct StateStatistics {
  VectorXd eta;
  MatrixXd Sigma;
  bool sigma_pd = false;  // proxy for minimality of the realization
};

inline StateStatistics state_statistics(const SensitivityRealization& real,
                                        const GaussianInputSpec& input) {
  const int d = real.dim;
  StateStatistics st;
  st.eta = (MatrixXd::Identity(d, d) - real.A).partialPivLu().solve(real.b * input.mean);
  switch (input.kind) {
    case GaussianInputSpec::Kind::White: {
      if (input.variance <= 0.0) throw ConfigError("white input needs variance > 0");
      st.Sigma = solve_discrete_lyapunov(real.A, input.variance * real.b * real.b.transpose());
      break;
    }
    case GaussianInputSpec::Kind::Shaped: {
      const ShapingRealization sr = build_shaping(input);
      const int da = d + sr.dim;
      MatrixXd Aaug = MatrixXd::Zero(da, da);
      Aaug.topLeftCorner(d, d) = real.A;
      VectorXd Baug(da);
      Baug.head(d) = real.b * sr.h0;
      if (sr.dim > 0) {
        Aaug.topRightCorner(d, sr.dim) = real.b * sr.ch.transpose();
        Aaug.bottomRightCorner(sr.dim, sr.dim) = sr.Ah;
        Baug.tail(sr.dim) = sr.bh;
      }
      MatrixXd Saug = solve_discrete_lyapunov(Aaug, Baug * Baug.transpose());
      st.Sigma = Saug.topLeftCorner(d, d);
      break;
    }
    case GaussianInputSpec::Kind::Direct: {
      const MatrixXd& S = input.sigma_direct;
      if (S.rows() != d || S.cols() != d) throw DimensionError("direct Sigma has wrong size");
      if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + S.cwiseAbs().maxCoeff())) {
        throw ConfigError("direct Sigma must be symmetric");
      }
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
      if (es.eigenvalues().minCoeff() <= 0.0) {
        throw ConfigError("direct Sigma must be positive definite");
      }
      st.Sigma = 0.5 * (S + S.transpose());
      break;
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(st.Sigma);
  st.sigma_pd = es.eigenvalues().minCoeff() > kSigmaPdTol * std::max(1.0, es.eigenvalues().maxCoeff());
  return st;
}

inline double input_variance(const GaussianInputSpec& input) {
  switch (input.kind) {
    case GaussianInputSpec::Kind::White:
      return input.variance;
    case GaussianInputSpec::Kind::Shaped: {
      const ShapingRealization sr = build_shaping(input);
      if (sr.dim == 0) return sr.h0 * sr.h0;
      MatrixXd Sh = solve_discrete_lyapunov(sr.Ah, sr.bh * sr.bh.transpose());
      return sr.ch.dot(Sh * sr.ch) + sr.h0 * sr.h0;
    }
    case GaussianInputSpec::Kind::Direct:
      throw ConfigError("input variance undefined for a direct covariance spec");
  }
  return 0.0;
}

}  // namespace wfim
