#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <utility>
#include <vector>

#include "wfim/errors.hpp"

namespace wfim {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

inline constexpr double kStabilityMargin = 1e-8;
inline constexpr double kIdentifiabilityTol = 1e-8;
inline constexpr double kConstraintEntryTol = 1e-6;

// Linear subsystem G(z) = (g0 + g1 z^-1 + ... + gn z^-n) / (1 + a1 z^-1 + ... + an z^-n).
// In the FIR case the denominator is 1 and a is empty.
struct LinearParams {
  VectorXd a;   // denominator coefficients a1..an (empty when fir)
  VectorXd g;   // numerator coefficients g1..gn
  double g0 = 0.0;
  bool fir = false;

  int order() const { return static_cast<int>(g.size()); }

  // Free parameter vector: [a; g; g0] rational, [g; g0] FIR.
  VectorXd theta() const {
    const int n = order();
    VectorXd th(fir ? n + 1 : 2 * n + 1);
    if (!fir) th.head(n) = a;
    th.segment(fir ? 0 : n, n) = g;
    th(th.size() - 1) = g0;
    return th;
  }

  int theta_dim() const { return fir ? order() + 1 : 2 * order() + 1; }
};

// Largest root magnitude of z^n + a1 z^(n-1) + ... + an.
inline double denominator_spectral_radius(const VectorXd& a) {
  const int n = static_cast<int>(a.size());
  if (n == 0) return 0.0;
  MatrixXd comp = MatrixXd::Zero(n, n);
  comp.row(0) = -a.transpose();
  if (n > 1) comp.block(1, 0, n - 1, n - 1).setIdentity();
  return comp.eigenvalues().cwiseAbs().maxCoeff();
}

inline void check_stability(const LinearParams& lin) {
  if (lin.fir) return;
  if (lin.order() < 1) throw DimensionError("rational model needs n >= 1");
  const double rho = denominator_spectral_radius(lin.a);
  if (rho >= 1.0 - kStabilityMargin) {
    throw StabilityError("unstable denominator: spectral radius " + std::to_string(rho));
  }
}

inline void validate(const LinearParams& lin) {
  if (lin.fir) {
    if (lin.a.size() != 0 && lin.a.cwiseAbs().maxCoeff() != 0.0) {
      throw ConfigError("FIR model must not carry denominator coefficients");
    }
  } else {
    if (lin.a.size() != lin.g.size()) {
      throw DimensionError("a and g must have equal length in the rational case");
    }
    check_stability(lin);
  }
}

// Static polynomial nonlinearity alpha0 + alpha1 x + ... + alpham x^m.
struct NonlinearParams {
  VectorXd alpha_bar;  // coefficients alpha0..alpham

  int degree() const { return static_cast<int>(alpha_bar.size()) - 1; }
};

inline void validate(const NonlinearParams& nl) {
  if (nl.degree() < 1) throw ConfigError("polynomial degree must be >= 1");
  if (nl.alpha_bar.tail(nl.degree()).cwiseAbs().maxCoeff() == 0.0) {
    throw DegenerateError("alpha1..alpham all zero: degenerate nonlinearity");
  }
}

inline double poly_eval(const VectorXd& alpha_bar, double x) {
  double acc = 0.0;
  for (int k = static_cast<int>(alpha_bar.size()) - 1; k >= 0; --k) {
    acc = acc * x + alpha_bar(k);
  }
  return acc;
}

// Normalization upsilon' * alpha_bar = 1 with a pivot index ell and an
// ordering i_1..i_m of the remaining indices.
struct NormalizationConstraint {
  VectorXd upsilon;
  int ell = 1;
  VectorXi order;  // permutation of {0..m} \ {ell}

  int degree() const { return static_cast<int>(upsilon.size()) - 1; }

  static VectorXi default_order(int m, int ell) {
    VectorXi ord(m);
    int j = 0;
    for (int k = 0; k <= m; ++k) {
      if (k != ell) ord(j++) = k;
    }
    return ord;
  }
};

inline void validate(const NormalizationConstraint& c) {
  const int m = c.degree();
  if (m < 1) throw DimensionError("upsilon must have length >= 2");
  // ell = 0 is admitted so degenerate pivots (e.g. upsilon = e0) can still be
  // analyzed; they come out non-identifiable rather than rejected.
  if (c.ell < 0 || c.ell > m) throw ConstraintError("ell must lie in {0..m}");
  if (c.upsilon(c.ell) == 0.0) throw ConstraintError("upsilon[ell] must be nonzero");
  if (c.order.size() != m) throw DimensionError("order must list m indices");
  std::vector<bool> seen(m + 1, false);
  for (int k = 0; k < m; ++k) {
    const int i = c.order(k);
    if (i < 0 || i > m || i == c.ell || seen[i]) {
      throw ConstraintError("order must be a permutation of {0..m} minus ell");
    }
    seen[i] = true;
  }
}

// Elimination matrix L (m x (m+1)) and permutation P ((m+1) x (m+1)).
struct ConstraintMaps {
  MatrixXd L;
  MatrixXd P;

  MatrixXd L1() const { return L * P; }
};

inline ConstraintMaps build_constraint_maps(const NormalizationConstraint& c, int m) {
  if (c.degree() != m) throw DimensionError("upsilon length inconsistent with m");
  validate(c);
  ConstraintMaps maps;
  maps.L = MatrixXd::Zero(m, m + 1);
  maps.L.leftCols(m).setIdentity();
  maps.P = MatrixXd::Zero(m + 1, m + 1);
  for (int k = 0; k < m; ++k) {
    maps.L(k, m) = -c.upsilon(c.order(k)) / c.upsilon(c.ell);
    maps.P(k, c.order(k)) = 1.0;
  }
  maps.P(m, c.ell) = 1.0;
  return maps;
}

// Fill alpha_bar from the free parameters, solving the constraint for alpha_ell.
inline VectorXd lift_alpha(const VectorXd& alpha, const NormalizationConstraint& c) {
  const int m = c.degree();
  if (alpha.size() != m) throw DimensionError("alpha must have length m");
  validate(c);
  VectorXd bar(m + 1);
  double acc = 1.0;
  for (int k = 0; k < m; ++k) {
    bar(c.order(k)) = alpha(k);
    acc -= c.upsilon(c.order(k)) * alpha(k);
  }
  bar(c.ell) = acc / c.upsilon(c.ell);
  return bar;
}

inline VectorXd reduce_alpha(const VectorXd& alpha_bar, const NormalizationConstraint& c) {
  const int m = c.degree();
  if (alpha_bar.size() != m + 1) throw DimensionError("alpha_bar must have length m+1");
  validate(c);
  const double s = c.upsilon.dot(alpha_bar);
  if (std::abs(s - 1.0) > 1e-9) {
    throw ConstraintError("normalization violated: upsilon'*alpha_bar = " + std::to_string(s));
  }
  VectorXd alpha(m);
  for (int k = 0; k < m; ++k) alpha(k) = alpha_bar(c.order(k));
  return alpha;
}

struct WienerModel {
  LinearParams linear;
  NonlinearParams nonlinearity;
  NormalizationConstraint constraint;

  int degree() const { return nonlinearity.degree(); }

  // Derivative coefficient vectors entering Theorem-style expressions:
  // alpha1 = (0, a1, 2 a2, ..., m am), alpha2 = (a1, 2 a2, ..., m am, 0).
  VectorXd alpha1() const {
    const int m = degree();
    VectorXd v = VectorXd::Zero(m + 1);
    for (int k = 1; k <= m; ++k) v(k) = k * nonlinearity.alpha_bar(k);
    return v;
  }
  VectorXd alpha2() const {
    const int m = degree();
    VectorXd v = VectorXd::Zero(m + 1);
    for (int k = 1; k <= m; ++k) v(k - 1) = k * nonlinearity.alpha_bar(k);
    return v;
  }
};

// Constructs a model, rescaling alpha_bar to meet the normalization exactly
// when it is off by entry round-off only.
inline WienerModel make_model(LinearParams lin, NonlinearParams nl, NormalizationConstraint c) {
  validate(lin);
  validate(nl);
  if (c.order.size() == 0) c.order = NormalizationConstraint::default_order(c.degree(), c.ell);
  validate(c);
  if (nl.degree() != c.degree()) {
    throw DimensionError("nonlinearity degree and constraint length disagree");
  }
  const double s = c.upsilon.dot(nl.alpha_bar);
  if (std::abs(s - 1.0) > kConstraintEntryTol) {
    throw ConstraintError("upsilon'*alpha_bar = " + std::to_string(s) + ", expected 1");
  }
  if (s != 1.0) nl.alpha_bar /= s;
  return WienerModel{std::move(lin), std::move(nl), std::move(c)};
}

struct IdentifiabilityReport {
  double s = 0.0;  // alpha1' * upsilon
  bool identifiable = false;
};

inline IdentifiabilityReport check_identifiability(const WienerModel& model) {
  IdentifiabilityReport rep;
  const VectorXd a1 = model.alpha1();
  rep.s = a1.dot(model.constraint.upsilon);
  const double scale = a1.norm() * model.constraint.upsilon.norm();
  rep.identifiable = std::abs(rep.s) > kIdentifiabilityTol * scale;
  return rep;
}

// Direct-form filtering of u through G, zero initial state.
inline VectorXd filter_linear(const LinearParams& lin, const VectorXd& u) {
  check_stability(lin);
  const int n = lin.order();
  const auto T = u.size();
  VectorXd w(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    double acc = lin.g0 * u(t);
    for (int i = 1; i <= n; ++i) {
      if (t - i >= 0) {
        acc += lin.g(i - 1) * u(t - i);
        if (!lin.fir) acc -= lin.a(i - 1) * w(t - i);
      }
    }
    w(t) = acc;
  }
  return w;
}

inline VectorXd eval_model(const WienerModel& model, const VectorXd& u) {
  VectorXd y = filter_linear(model.linear, u);
  for (Eigen::Index t = 0; t < y.size(); ++t) {
    y(t) = poly_eval(model.nonlinearity.alpha_bar, y(t));
  }
  return y;
}

}  // namespace wfim
