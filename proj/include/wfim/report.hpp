#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "wfim/design.hpp"
#include "wfim/fim.hpp"
#include "wfim/mc.hpp"

namespace wfim {

inline constexpr const char* kToolVersion = "0.1.0";

// FNV-1a over the canonical config dump; stable across runs.
inline std::string config_hash(const json& config) {
  const std::string s = config.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

inline json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline json vector_to_json(const VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline json fim_result_to_json(const FimResult& res) {
  json j;
  j["J"] = matrix_to_json(res.J);
  j["det_direct"] = res.det_direct;
  j["det_factored"] = res.det_factored;
  j["r1"] = res.r1;
  j["r2"] = res.r2;
  j["f"] = res.f;
  j["beta"] = res.beta;
  j["identifiable"] = res.identifiable;
  return j;
}

inline json oracle_report_to_json(const OracleReport& rep) {
  json j;
  j["J_hat"] = matrix_to_json(rep.J_hat);
  j["Sigma_hat"] = matrix_to_json(rep.Sigma_hat);
  j["gamma_hat"] = rep.gamma_hat;
  j["sigma_hat"] = rep.sigma_hat;
  j["rel_err_J"] = rep.rel_err_J;
  j["grad_max_rel_err"] = rep.grad_max_rel_err;
  j["samples"] = rep.samples;
  return j;
}

inline std::string scan_result_to_csv(const ScanResult& res) {
  std::ostringstream os;
  os.precision(17);
  os << "s,sigma,gamma,f,detSigma,detJ,feasible\n";
  for (const auto& row : res.rows) {
    os << row.s << ',' << row.sigma << ',' << row.gamma << ',' << row.f << ','
       << row.det_sigma << ',' << row.det_J << ',' << (row.feasible ? 1 : 0) << '\n';
  }
  return os.str();
}

inline json scan_result_to_json(const ScanResult& res) {
  json j;
  j["budget"] = res.budget;
  j["argmax"] = res.argmax;
  json rows = json::array();
  for (const auto& row : res.rows) {
    rows.push_back({{"s", row.s},
                    {"sigma", row.sigma},
                    {"gamma", row.gamma},
                    {"f", row.f},
                    {"detSigma", row.det_sigma},
                    {"detJ", row.det_J},
                    {"inputPower", row.input_power},
                    {"feasible", row.feasible}});
  }
  j["rows"] = rows;
  return j;
}

}  // namespace wfim
