// Command-line front end: reads a JSON model/input config, runs the requested
// computation and writes JSON/CSV reports.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "wfim/config.hpp"
#include "wfim/design.hpp"
#include "wfim/fim.hpp"
#include "wfim/mc.hpp"
#include "wfim/moments.hpp"
#include "wfim/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;
constexpr int kExitTolerance = 5;
constexpr int kExitInfeasible = 6;

struct Options {
  std::string config_path;
  std::string out_path;
  std::string csv_path;
  std::string dump_samples_path;
  std::int64_t samples = 1000000;
  std::int64_t burn_in = -1;
  std::uint64_t seed = 0;
  int streams = 1;
  std::vector<double> scales;
  double budget = 0.0;
  double tolerance = 0.02;
};

void emit_error(const std::string& code, const std::string& message) {
  wfim::json j;
  j["error"] = {{"code", code}, {"message", message}};
  std::cout << j.dump() << "\n";
}

wfim::json load_config_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open config: " + path);
  wfim::json j;
  in >> j;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open output: " + path);
  out << text;
  if (!out) throw std::ios_base::failure("write failed: " + path);
}

void stamp(wfim::json& report, const wfim::json& config) {
  report["config_hash"] = wfim::config_hash(config);
  report["version"] = wfim::kToolVersion;
}

struct Prepared {
  wfim::json config_json;
  wfim::RunConfig cfg;
  wfim::SensitivityRealization real;
};

Prepared prepare(const Options& opt) {
  Prepared p;
  p.config_json = load_config_json(opt.config_path);
  p.cfg = wfim::parse_config(p.config_json);
  p.real = wfim::build_sensitivity_realization(p.cfg.model.linear);
  return p;
}

int cmd_fim(const Options& opt, bool det_only) {
  auto p = prepare(opt);
  const auto stats = wfim::state_statistics(p.real, p.cfg.input);
  const auto [gamma, sigma] = wfim::output_stats(p.real, stats);
  const auto ctx = wfim::build_moment_context(p.cfg.model, gamma, sigma);
  wfim::json report;
  if (det_only) {
    const auto det = wfim::fim_determinant(p.cfg.model, p.real, stats, ctx);
    report["det_factored"] = det.det_factored;
    report["r1"] = det.r1;
    report["r2"] = det.r2;
    report["f"] = det.f;
  } else {
    const auto res = wfim::assemble_fim(p.cfg.model, p.real, stats, ctx);
    report = wfim::fim_result_to_json(res);
  }
  report["gamma"] = gamma;
  report["sigma"] = sigma;
  stamp(report, p.config_json);
  write_text(opt.out_path, report.dump(2) + "\n");
  return kExitOk;
}

int cmd_verify(const Options& opt) {
  auto p = prepare(opt);
  wfim::SimulationPlan plan{opt.samples, opt.burn_in, opt.seed, opt.streams};
  auto rep = wfim::empirical_fim(p.cfg.model, p.real, p.cfg.input, plan);

  // Worst finite-difference score mismatch on a short deterministic replay.
  wfim::SimulationPlan probe{256, plan.burn_in < 0 ? wfim::default_burn_in(p.cfg.model.linear)
                                                   : plan.burn_in,
                             opt.seed, 1};
  std::vector<double> u_hist;
  wfim::simulate_states(p.real, p.cfg.input, probe,
                        [&](const wfim::VectorXd&, double u) { u_hist.push_back(u); });
  wfim::VectorXd u = Eigen::Map<wfim::VectorXd>(u_hist.data(), u_hist.size());
  for (Eigen::Index t = u.size() - 10; t < u.size(); ++t) {
    rep.grad_max_rel_err =
        std::max(rep.grad_max_rel_err, wfim::finite_diff_score(p.cfg.model, u, t).max_rel_err);
  }

  wfim::json report = wfim::oracle_report_to_json(rep);
  report["seed"] = opt.seed;
  report["streams"] = opt.streams;
  report["tolerance"] = opt.tolerance;
  stamp(report, p.config_json);
  write_text(opt.out_path, report.dump(2) + "\n");
  if (rep.rel_err_J > opt.tolerance) {
    emit_error("tolerance", "rel_err_J = " + std::to_string(rep.rel_err_J) +
                                " exceeds " + std::to_string(opt.tolerance));
    return kExitTolerance;
  }
  return kExitOk;
}

int cmd_scan(const Options& opt) {
  auto p = prepare(opt);
  const auto result = wfim::scan_sigma(p.cfg.model, p.cfg.input, opt.scales, opt.budget);
  wfim::json report = wfim::scan_result_to_json(result);
  stamp(report, p.config_json);
  write_text(opt.out_path, report.dump(2) + "\n");
  if (!opt.csv_path.empty()) write_text(opt.csv_path, wfim::scan_result_to_csv(result));
  return kExitOk;
}

int cmd_simulate(const Options& opt) {
  auto p = prepare(opt);
  wfim::SimulationPlan plan{opt.samples, opt.burn_in, opt.seed, opt.streams};
  if (plan.burn_in < 0) plan.burn_in = wfim::default_burn_in(p.cfg.model.linear);

  std::ofstream dump;
  if (!opt.dump_samples_path.empty()) {
    dump.open(opt.dump_samples_path, std::ios::binary);
    if (!dump) throw std::ios_base::failure("cannot open " + opt.dump_samples_path);
    dump.precision(17);
    dump << "t,u,w\n";
  }
  const int d = p.real.dim;
  wfim::MatrixXd sum_xx = wfim::MatrixXd::Zero(d, d);
  wfim::VectorXd sum_x = wfim::VectorXd::Zero(d);
  std::int64_t t = 0;
  wfim::simulate_states(p.real, p.cfg.input, plan, [&](const wfim::VectorXd& x, double u) {
    sum_x += x;
    sum_xx.noalias() += x * x.transpose();
    if (dump.is_open()) dump << t << ',' << u << ',' << p.real.c.dot(x) << '\n';
    ++t;
  });
  const double N = static_cast<double>(plan.samples);
  const wfim::VectorXd xbar = sum_x / N;
  wfim::json report;
  report["samples"] = plan.samples;
  report["burn_in"] = plan.burn_in;
  report["seed"] = opt.seed;
  report["streams"] = opt.streams;
  report["eta_hat"] = wfim::vector_to_json(xbar);
  report["Sigma_hat"] = wfim::matrix_to_json(sum_xx / N - xbar * xbar.transpose());
  stamp(report, p.config_json);
  write_text(opt.out_path, report.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fisher information matrix toolkit for Wiener models under Gaussian input"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON config path")->required();
    sub->add_option("--out", opt.out_path, "report output path (default: stdout)");
  };
  auto add_sim = [&](CLI::App* sub) {
    sub->add_option("--samples", opt.samples, "Monte Carlo sample count");
    sub->add_option("--burn-in", opt.burn_in, "burn-in samples (default: automatic)");
    sub->add_option("--seed", opt.seed, "RNG seed");
    sub->add_option("--streams", opt.streams, "independent sample streams");
  };

  auto* fim = app.add_subcommand("fim", "closed-form information matrix and determinant");
  add_common(fim);
  auto* det = app.add_subcommand("det", "determinant factorization only");
  add_common(det);
  auto* verify = app.add_subcommand("verify", "Monte Carlo cross-validation of the closed form");
  add_common(verify);
  add_sim(verify);
  verify->add_option("--tolerance", opt.tolerance, "max allowed relative Frobenius error");
  auto* scan = app.add_subcommand("scan", "D-optimal sweep over input power scales");
  add_common(scan);
  scan->add_option("--scales", opt.scales, "ascending positive scale factors")
      ->required()
      ->delimiter(',');
  scan->add_option("--budget", opt.budget, "max input variance")->required();
  scan->add_option("--csv", opt.csv_path, "CSV table output path");
  auto* simulate = app.add_subcommand("simulate", "simulate the state recursion");
  add_common(simulate);
  add_sim(simulate);
  simulate->add_option("--dump-samples", opt.dump_samples_path, "raw sample CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fim->parsed()) return cmd_fim(opt, false);
    if (det->parsed()) return cmd_fim(opt, true);
    if (verify->parsed()) return cmd_verify(opt);
    if (scan->parsed()) return cmd_scan(opt);
    if (simulate->parsed()) return cmd_simulate(opt);
  } catch (const wfim::BudgetError& e) {
    emit_error("infeasible", e.what());
    return kExitInfeasible;
  } catch (const wfim::StabilityError& e) {
    emit_error("unstable", e.what());
    return kExitNumerical;
  } catch (const wfim::NumericalError& e) {
    emit_error("numerical", e.what());
    return kExitNumerical;
  } catch (const wfim::ConfigError& e) {
    emit_error("config", e.what());
    return kExitConfig;
  } catch (const wfim::json::exception& e) {
    emit_error("config", e.what());
    return kExitConfig;
  } catch (const std::ios_base::failure& e) {
    emit_error("io", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    emit_error("error", e.what());
    return kExitNumerical;
  }
  return kExitOk;
}
