#pragma once

// Built-in analyser/state pairs used as fixtures by the tests and the CLI.

#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "histlab/analyser.hpp"

namespace histlab {

using ScenarioParams = std::map<std::string, double>;

struct ScenarioInstance {
  std::string name;
  Analyser analyser;
  CVector state;
  CMatrix hamiltonian;
};

struct ScenarioInfo {
  std::string name;
  std::string description;
};

inline std::vector<ScenarioInfo> list_scenarios() {
  return {
      {"D4", "two commuting diagonal two-cell partitions in C^4, uniform state"},
      {"PGRID", "position cells on a periodic ring under the discrete Laplacian, Gaussian packet"},
      {"Q2", "qubit: sigma_z cells then Heisenberg-rotated cells under (pi/4) sigma_y, state e0"},
      {"STATIC", "K identical diagonal qubit partitions (H = 0), state (sqrt p, sqrt(1-p))"},
      {"TRI9", "triadically nested coordinate cells in C^9 at times 1 and 2, uniform state"},
  };
}

namespace detail {

inline double param(const ScenarioParams& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

inline void check_param_keys(const ScenarioParams& params,
                             std::initializer_list<const char*> allowed,
                             const std::string& scenario) {
  for (const auto& [k, v] : params) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ValidationError("scenario " + scenario + ": unknown parameter '" + k + "'");
  }
}

inline Partition coordinate_partition(Index d, const std::vector<std::vector<Index>>& cells,
                                      const std::vector<std::string>& labels) {
  std::vector<Projector> ps;
  for (const auto& c : cells) ps.push_back(Projector::coordinates(d, c));
  return validate_partition(std::move(ps), labels);
}

inline Index integer_param(const ScenarioParams& params, const std::string& key,
                           double fallback, double min, const std::string& scenario) {
  const double v = param(params, key, fallback);
  if (v != std::floor(v) || v < min) {
    throw ValidationError("scenario " + scenario + ": parameter '" + key +
                          "' must be an integer >= " + std::to_string(static_cast<int>(min)));
  }
  return static_cast<Index>(v);
}

}  // namespace detail

inline ScenarioInstance scenario(const std::string& name, const ScenarioParams& params = {}) {
  using detail::coordinate_partition;
  if (name == "Q2") {
    detail::check_param_keys(params, {}, name);
    const Partition base = coordinate_partition(2, {{0}, {1}}, {"+", "-"});
    CMatrix sy(2, 2);
    sy << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
    CMatrix h = (std::numbers::pi / 4.0) * sy;
    const std::vector<Time> times{Time(0.0), Time(1.0)};
    Analyser an = heisenberg_analyser(base, h, times);
    CVector phi = CVector::Zero(2);
    phi(0) = 1.0;
    return {name, std::move(an), std::move(phi), std::move(h)};
  }
  if (name == "D4") {
    detail::check_param_keys(params, {}, name);
    std::vector<Partition> parts{coordinate_partition(4, {{0, 1}, {2, 3}}, {"1", "2"}),
                                 coordinate_partition(4, {{0, 2}, {1, 3}}, {"1", "2"})};
    Analyser an({Time(0.0), Time(1.0)}, std::move(parts));
    CVector phi = CVector::Constant(4, 0.5);
    return {name, std::move(an), std::move(phi), CMatrix::Zero(4, 4)};
  }
  if (name == "TRI9") {
    detail::check_param_keys(params, {}, name);
    std::vector<Partition> parts{
        coordinate_partition(9, {{0, 1, 2}, {3, 4, 5, 6, 7, 8}}, {"1", "2"}),
        coordinate_partition(9, {{0}, {1, 2, 3, 4, 5, 6, 7, 8}}, {"1", "2"})};
    Analyser an({Time(1.0), Time(2.0)}, std::move(parts));
    CVector phi = CVector::Constant(9, 1.0 / 3.0);
    return {name, std::move(an), std::move(phi), CMatrix::Zero(9, 9)};
  }
  if (name == "STATIC") {
    detail::check_param_keys(params, {"K", "p"}, name);
    const Index k = detail::integer_param(params, "K", 2, 1, name);
    const double p = detail::param(params, "p", 0.7);
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ValidationError("scenario STATIC: parameter 'p' must lie in [0, 1]");
    }
    const Partition base = coordinate_partition(2, {{0}, {1}}, {"1", "2"});
    std::vector<Time> times;
    for (Index i = 1; i <= k; ++i) times.emplace_back(static_cast<double>(i));
    CMatrix h = CMatrix::Zero(2, 2);
    Analyser an = heisenberg_analyser(base, h, times);
    CVector phi(2);
    phi << std::sqrt(p), std::sqrt(1.0 - p);
    return {name, std::move(an), std::move(phi), std::move(h)};
  }
  if (name == "PGRID") {
    detail::check_param_keys(params, {"n", "times", "dt", "k0", "width"}, name);
    const Index n = detail::integer_param(params, "n", 8, 2, name);
    const Index nt = detail::integer_param(params, "times", 3, 1, name);
    const double dt = detail::param(params, "dt", 0.5);
    const double k0 = detail::param(params, "k0", 0.5);
    const double width = detail::param(params, "width", 1.0);
    if (!(width > 0.0)) throw ValidationError("scenario PGRID: 'width' must be positive");
    if (!(dt > 0.0)) throw ValidationError("scenario PGRID: 'dt' must be positive");
    CMatrix h = CMatrix::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
      h(j, j) += 2.0;
      h(j, (j + 1) % n) -= 1.0;
      h((j + 1) % n, j) -= 1.0;
    }
    // n == 2: both neighbours coincide, which the loop above already doubles.
    std::vector<Index> left, right;
    for (Index j = 0; j < n; ++j) (j < n / 2 ? left : right).push_back(j);
    const Partition base = coordinate_partition(n, {left, right}, {"L", "R"});
    std::vector<Time> times;
    for (Index i = 0; i < nt; ++i) times.emplace_back(static_cast<double>(i) * dt);
    Analyser an = heisenberg_analyser(base, h, times);
    CVector phi(n);
    const double centre = static_cast<double>(n) / 4.0;
    for (Index j = 0; j < n; ++j) {
      const double x = static_cast<double>(j) - centre;
      phi(j) = std::exp(-x * x / (2.0 * width * width)) *
               std::exp(Complex(0.0, k0 * static_cast<double>(j)));
    }
    phi /= phi.norm();
    return {name, std::move(an), std::move(phi), std::move(h)};
  }
  throw ValidationError("unknown scenario '" + name + "'");
}

}  // namespace histlab
