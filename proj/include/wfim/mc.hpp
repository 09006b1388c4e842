#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "wfim/errors.hpp"
#include "wfim/fim.hpp"
#include "wfim/model.hpp"
#include "wfim/moments.hpp"
#include "wfim/state_space.hpp"

namespace wfim {

struct SimulationPlan {
  std::int64_t samples = 100000;
  std::int64_t burn_in = -1;  // negative: pick a default from the pole radius
  std::uint64_t seed = 0;
  int streams = 1;
};

// 100 n samples or 10 slowest-pole time constants, whichever is larger.
inline std::int64_t default_burn_in(const LinearParams& lin) {
  const std::int64_t floor = 100 * std::max(1, lin.order());
  if (lin.fir) return floor;
  const double rho = denominator_spectral_radius(lin.a);
  if (rho <= 0.0) return floor;
  const double tau = -1.0 / std::log(rho);
  return std::max(floor, static_cast<std::int64_t>(std::ceil(10.0 * tau)));
}

namespace detail {

// Per-stream input generator; each stream owns an independently seeded engine.
class InputSampler {
 public:
  InputSampler(const GaussianInputSpec& input, std::uint64_t seed, int stream) {
    if (input.kind == GaussianInputSpec::Kind::Direct) {
      throw ConfigError("cannot simulate a direct-covariance input spec");
    }
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), 0x9e3779b9u};
    engine_.seed(seq);
    mean_ = input.mean;
    if (input.kind == GaussianInputSpec::Kind::White) {
      scale_ = std::sqrt(input.variance);
    } else {
      shaping_ = build_shaping(input);
      xh_ = VectorXd::Zero(shaping_.dim);
    }
  }

  double next() {
    const double e = normal_(engine_);
    if (shaping_.dim == 0 && shaping_.h0 == 0.0) {
      return mean_ + scale_ * e;  // white
    }
    double u = mean_ + shaping_.h0 * e;
    if (shaping_.dim > 0) {
      u += shaping_.ch.dot(xh_);
      xh_ = (shaping_.Ah * xh_ + shaping_.bh * e).eval();
    }
    return u;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  double mean_ = 0.0;
  double scale_ = 0.0;
  ShapingRealization shaping_{};  // dim 0 and h0 0 in the white case
  VectorXd xh_;
};

}  // namespace detail

// Runs the state recursion x(t) = A x(t-1) + b u(t) over one stream and feeds
// each post-burn-in (x, u) pair to the sink.
inline void simulate_states(const SensitivityRealization& real, const GaussianInputSpec& input,
                            const SimulationPlan& plan,
                            const std::function<void(const VectorXd&, double)>& sink) {
  if (plan.samples < 1) throw ConfigError("plan needs samples >= 1");
  if (plan.streams < 1) throw ConfigError("plan needs streams >= 1");
  const std::int64_t burn = plan.burn_in;
  if (burn < 0) throw ConfigError("burn_in must be resolved before simulation");
  const double rho = real.A.eigenvalues().cwiseAbs().maxCoeff();
  if (rho >= 1.0 - kStabilityMargin) throw StabilityError("unstable realization");

  const std::int64_t per = plan.samples / plan.streams;
  const std::int64_t extra = plan.samples % plan.streams;
  for (int s = 0; s < plan.streams; ++s) {
    detail::InputSampler sampler(input, plan.seed, s);
    VectorXd x = VectorXd::Zero(real.dim);
    const std::int64_t count = per + (s < extra ? 1 : 0);
    for (std::int64_t t = 0; t < burn + count; ++t) {
      const double u = sampler.next();
      x = (real.A * x + real.b * u).eval();
      if (t >= burn) sink(x, u);
    }
  }
}

// Deterministic replay of the recursion on a given input sequence.
inline MatrixXd state_trajectory(const SensitivityRealization& real, const VectorXd& u) {
  MatrixXd X(real.dim, u.size());
  VectorXd x = VectorXd::Zero(real.dim);
  for (Eigen::Index t = 0; t < u.size(); ++t) {
    x = (real.A * x + real.b * u(t)).eval();
    X.col(t) = x;
  }
  return X;
}

// Score vector v_t = [L1 z(t); x(t) alpha2' z(t)] with z = (1, w, ..., w^m).
inline VectorXd analytic_score(const WienerModel& model, const SensitivityRealization& real,
                               const MatrixXd& L1, const VectorXd& x) {
  const int m = model.degree();
  VectorXd z(m + 1);
  const double w = real.c.dot(x);
  z(0) = 1.0;
  for (int k = 1; k <= m; ++k) z(k) = z(k - 1) * w;
  VectorXd v(m + real.dim);
  v.head(m) = L1 * z;
  v.tail(real.dim) = x * model.alpha2().dot(z);
  return v;
}

struct OracleReport {
  MatrixXd J_hat;
  MatrixXd Sigma_hat;
  double gamma_hat = 0.0;
  double sigma_hat = 0.0;
  double rel_err_J = 0.0;       // vs. the closed-form J
  double grad_max_rel_err = 0.0;
  std::int64_t samples = 0;
};

inline OracleReport empirical_fim(const WienerModel& model, const SensitivityRealization& real,
                                  const GaussianInputSpec& input, SimulationPlan plan) {
  if (plan.burn_in < 0) plan.burn_in = default_burn_in(model.linear);
  const int m = model.degree();
  const int d = real.dim;
  const MatrixXd L1 = build_constraint_maps(model.constraint, m).L1();
  const VectorXd alpha2 = model.alpha2();

  MatrixXd sum_vv = MatrixXd::Zero(m + d, m + d);
  MatrixXd sum_xx = MatrixXd::Zero(d, d);
  VectorXd sum_x = VectorXd::Zero(d);
  double sum_w = 0.0, sum_w2 = 0.0;
  VectorXd z(m + 1), v(m + d);

  simulate_states(real, input, plan, [&](const VectorXd& x, double /*u*/) {
    const double w = real.c.dot(x);
    z(0) = 1.0;
    for (int k = 1; k <= m; ++k) z(k) = z(k - 1) * w;
    v.head(m) = L1 * z;
    v.tail(d) = x * alpha2.dot(z);
    sum_vv.noalias() += v * v.transpose();
    sum_xx.noalias() += x * x.transpose();
    sum_x += x;
    sum_w += w;
    sum_w2 += w * w;
  });

  const double N = static_cast<double>(plan.samples);
  OracleReport rep;
  rep.samples = plan.samples;
  rep.J_hat = sum_vv / N;
  const VectorXd xbar = sum_x / N;
  rep.Sigma_hat = sum_xx / N - xbar * xbar.transpose();
  rep.gamma_hat = sum_w / N;
  rep.sigma_hat = sum_w2 / N - rep.gamma_hat * rep.gamma_hat;

  const auto stats = state_statistics(real, input);
  const auto [gamma, sigma] = output_stats(real, stats);
  const auto ctx = build_moment_context(model, gamma, sigma);
  const auto closed = assemble_fim(model, real, stats, ctx);
  rep.rel_err_J = (rep.J_hat - closed.J).norm() / closed.J.norm();
  return rep;
}

struct ScoreCheck {
  VectorXd v_analytic;
  VectorXd v_numeric;
  double max_rel_err = 0.0;
};

namespace detail {

inline double model_output_at(const WienerModel& model, const VectorXd& u, Eigen::Index t) {
  const VectorXd y = eval_model(model, u.head(t + 1));
  return y(t);
}

}  // namespace detail

// Central-difference score in each free parameter (free alpha first, then
// theta), lifting alpha so the normalization stays satisfied.
inline ScoreCheck finite_diff_score(const WienerModel& model, const VectorXd& u_window,
                                    Eigen::Index t) {
  if (t < 0 || t >= u_window.size()) throw DimensionError("time index outside window");
  const auto real = build_sensitivity_realization(model.linear);
  const MatrixXd L1 = build_constraint_maps(model.constraint, model.degree()).L1();
  const MatrixXd X = state_trajectory(real, u_window.head(t + 1));

  ScoreCheck chk;
  chk.v_analytic = analytic_score(model, real, L1, X.col(t));

  const int m = model.degree();
  const VectorXd alpha0 = reduce_alpha(model.nonlinearity.alpha_bar, model.constraint);
  const VectorXd theta0 = model.linear.theta();
  const int n_free = m + static_cast<int>(theta0.size());
  chk.v_numeric.resize(n_free);

  auto perturbed_output = [&](int idx, double step) {
    WienerModel pert = model;
    if (idx < m) {
      VectorXd alpha = alpha0;
      alpha(idx) += step;
      pert.nonlinearity.alpha_bar = lift_alpha(alpha, model.constraint);
    } else {
      const int j = idx - m;
      const int n = model.linear.order();
      VectorXd theta = theta0;
      theta(j) += step;
      if (!model.linear.fir) pert.linear.a = theta.head(n);
      pert.linear.g = theta.segment(model.linear.fir ? 0 : n, n);
      pert.linear.g0 = theta(theta.size() - 1);
    }
    return detail::model_output_at(pert, u_window, t);
  };

  const double vscale = std::max(chk.v_analytic.cwiseAbs().maxCoeff(), 1.0);
  for (int idx = 0; idx < n_free; ++idx) {
    const double base = idx < m ? alpha0(idx) : theta0(idx - m);
    const double h = 1e-6 * (1.0 + std::abs(base));
    if (h == 0.0) throw NumericalError("finite-difference step underflow");
    const double fp = perturbed_output(idx, h);
    const double fmn = perturbed_output(idx, -h);
    chk.v_numeric(idx) = (fp - fmn) / (2.0 * h);
    const double denom = std::max(std::abs(chk.v_analytic(idx)), 1e-3 * vscale);
    chk.max_rel_err = std::max(chk.max_rel_err,
                               std::abs(chk.v_numeric(idx) - chk.v_analytic(idx)) / denom);
  }
  return chk;
}

}  // namespace wfim
