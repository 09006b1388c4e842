#pragma once

#include <nlohmann/json.hpp>
#include <set>
#include <string>

#include "wfim/errors.hpp"
#include "wfim/model.hpp"
#include "wfim/state_space.hpp"

namespace wfim {

using nlohmann::json;

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& allowed,
                           const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown field \"" + key + "\" in " + where);
    }
  }
}

inline VectorXd to_vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + " must be an array of numbers");
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(where + " must contain numbers only");
    v(i) = j[i].get<double>();
  }
  return v;
}

inline MatrixXd to_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + " must be a nested array");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ConfigError(where + " rows must have equal length");
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

}  // namespace detail

inline LinearParams parse_linear(const json& j) {
  detail::reject_unknown(j, {"a", "g", "g0", "fir"}, "linear");
  LinearParams lin;
  if (j.contains("a")) lin.a = detail::to_vector(j.at("a"), "linear.a");
  if (!j.contains("g")) throw ConfigError("linear.g is required");
  lin.g = detail::to_vector(j.at("g"), "linear.g");
  if (!j.contains("g0")) throw ConfigError("linear.g0 is required");
  lin.g0 = j.at("g0").get<double>();
  lin.fir = j.value("fir", false);
  return lin;
}

inline NonlinearParams parse_nonlinearity(const json& j) {
  detail::reject_unknown(j, {"alpha_bar"}, "nonlinearity");
  if (!j.contains("alpha_bar")) throw ConfigError("nonlinearity.alpha_bar is required");
  return NonlinearParams{detail::to_vector(j.at("alpha_bar"), "nonlinearity.alpha_bar")};
}

inline NormalizationConstraint parse_constraint(const json& j) {
  detail::reject_unknown(j, {"upsilon", "ell", "order"}, "constraint");
  NormalizationConstraint c;
  if (!j.contains("upsilon")) throw ConfigError("constraint.upsilon is required");
  c.upsilon = detail::to_vector(j.at("upsilon"), "constraint.upsilon");
  if (!j.contains("ell")) throw ConfigError("constraint.ell is required");
  c.ell = j.at("ell").get<int>();
  if (j.contains("order")) {
    const VectorXd ord = detail::to_vector(j.at("order"), "constraint.order");
    c.order = ord.cast<int>();
  } else {
    c.order = NormalizationConstraint::default_order(c.degree(), c.ell);
  }
  return c;
}

inline GaussianInputSpec parse_input(const json& j) {
  detail::reject_unknown(j, {"mean", "kind", "variance", "shaping", "sigma"}, "input");
  GaussianInputSpec spec;
  spec.mean = j.value("mean", 0.0);
  const std::string kind = j.value("kind", "white");
  if (kind == "white") {
    spec.kind = GaussianInputSpec::Kind::White;
    if (!j.contains("variance")) throw ConfigError("white input needs \"variance\"");
    spec.variance = j.at("variance").get<double>();
    if (spec.variance <= 0.0) throw ConfigError("input.variance must be > 0");
  } else if (kind == "shaped") {
    spec.kind = GaussianInputSpec::Kind::Shaped;
    if (!j.contains("shaping")) throw ConfigError("shaped input needs \"shaping\"");
    const json& sh = j.at("shaping");
    detail::reject_unknown(sh, {"num", "den"}, "input.shaping");
    spec.shaping_num = detail::to_vector(sh.at("num"), "input.shaping.num");
    spec.shaping_den = detail::to_vector(sh.at("den"), "input.shaping.den");
  } else if (kind == "direct") {
    spec.kind = GaussianInputSpec::Kind::Direct;
    if (!j.contains("sigma")) throw ConfigError("direct input needs \"sigma\"");
    spec.sigma_direct = detail::to_matrix(j.at("sigma"), "input.sigma");
  } else {
    throw ConfigError("input.kind must be white, shaped, or direct");
  }
  return spec;
}

struct RunConfig {
  WienerModel model;
  GaussianInputSpec input;
};

inline RunConfig parse_config(const json& j) {
  detail::reject_unknown(j, {"linear", "nonlinearity", "constraint", "input"}, "config");
  for (const char* req : {"linear", "nonlinearity", "constraint", "input"}) {
    if (!j.contains(req)) throw ConfigError(std::string("config needs \"") + req + "\"");
  }
  RunConfig cfg{make_model(parse_linear(j.at("linear")), parse_nonlinearity(j.at("nonlinearity")),
                           parse_constraint(j.at("constraint"))),
                parse_input(j.at("input"))};
  return cfg;
}

}  // namespace wfim
