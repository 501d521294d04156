#pragma once

// The Born path measure on Ω, event probabilities via the PVM {p_A},
// conditional probabilities, observables Q_f and null-event logic.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "histlab/commutant.hpp"

namespace histlab {

struct PathMeasure {
  Analyser analyser;
  CommutantDecomposition decomposition;
  CVector state;  // normalized φ̂
  std::vector<double> probabilities;

  [[nodiscard]] const HistorySpace& space() const { return decomposition.space; }
  [[nodiscard]] double total() const {
    double s = 0.0;
    for (double p : probabilities) s += p;
    return s;
  }
};

namespace detail {

inline CVector normalized_in_hpi(const CommutantDecomposition& dec, const CVector& phi,
                                 const Tolerances& tol) {
  require_same_dim(phi.size(), dec.dim(), "state");
  const double n = phi.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw ValidationError("state is zero");
  CVector hat = phi / n;
  const double off = (hat - dec.h_pi.project(hat)).norm();
  if (off >= tol.vec(dec.dim())) {
    throw ValidationError("state does not lie in H_pi (residual " + std::to_string(off) + ")");
  }
  return hat;
}

}  // namespace detail

/// P(ω) = ||p_ω φ̂||² for every full history.
inline PathMeasure make_path_measure(const Analyser& an, const CommutantDecomposition& dec,
                                     const CVector& phi, const Tolerances& tol = {}) {
  require_same_dim(an.dim(), dec.dim(), "make_path_measure");
  CVector hat = detail::normalized_in_hpi(dec, phi, tol);
  std::vector<double> probs(dec.space.size(), 0.0);
  for (const auto& [h, s] : dec.joint_table) {
    probs[h] = (s.basis().adjoint() * hat).squaredNorm();
  }
  PathMeasure pm{an, dec, std::move(hat), std::move(probs)};
  const double total = pm.total();
  if (std::abs(total - 1.0) > tol.probability()) {
    throw ConsistencyViolation("path measure total mass " + std::to_string(total));
  }
  return pm;
}

struct BornForms {
  double meet_form = 0.0;
  double product_form = 0.0;
};

/// Both evaluations of P(X_{t_i} = a_i): the joint-meet form and the
/// time-ordered product form.
inline BornForms born_forms(const Analyser& an, const CommutantDecomposition& dec,
                            const CVector& phi, const Assignment& assignment,
                            const Tolerances& tol = {}) {
  const CVector hat = detail::normalized_in_hpi(dec, phi, tol);
  BornForms f;
  f.meet_form = (joint_projector(an, assignment, tol).projector.matrix() * hat).squaredNorm();
  CVector v = hat;
  for (const auto& [ti, a] : an.resolve(assignment)) v = an.cell(ti, a).matrix() * v;
  f.product_form = v.squaredNorm();
  return f;
}

inline double path_probability(const Analyser& an, const CommutantDecomposition& dec,
                               const CVector& phi, const Assignment& assignment,
                               const Tolerances& tol = {}) {
  const BornForms f = born_forms(an, dec, phi, assignment, tol);
  if (std::abs(f.meet_form - f.product_form) > tol.probability()) {
    throw ConsistencyViolation("Born forms disagree: meet " + std::to_string(f.meet_form) +
                               ", product " + std::to_string(f.product_form));
  }
  return f.meet_form;
}

struct CollapseChain {
  double probability = 0.0;
  std::vector<double> step_probabilities;
  /// Renormalized post-collapse states, one per completed step.
  std::vector<CVector> states;
  bool truncated = false;
};

/// Textbook sequential collapse along strictly increasing times.
inline CollapseChain collapse_chain(const Analyser& an, const CVector& phi,
                                    const std::vector<std::pair<Time, std::string>>& steps,
                                    const Tolerances& tol = {}) {
  require_same_dim(phi.size(), an.dim(), "collapse_chain");
  const double n = phi.norm();
  if (!(n > 0.0)) throw ValidationError("collapse_chain: initial state is zero");
  CollapseChain out;
  out.probability = 1.0;
  CVector cur = phi / n;
  std::optional<std::size_t> last;
  for (const auto& [t, label] : steps) {
    const std::size_t ti = an.time_index(t);
    if (last && ti <= *last) {
      throw ValidationError("collapse_chain: times must be strictly increasing");
    }
    last = ti;
    const CVector next = an.cell(ti, an.label_index(ti, label)).matrix() * cur;
    const double p = next.squaredNorm();
    out.step_probabilities.push_back(p);
    out.probability *= p;
    if (next.norm() < tol.vec(an.dim())) {
      out.probability = 0.0;
      out.truncated = true;
      return out;
    }
    cur = next / next.norm();
    out.states.push_back(cur);
  }
  return out;
}

/// Σ_{ω∈A} P(ω), cross-checked against ||p_A φ̂||².
inline double event_probability(const PathMeasure& pm, const Event& a,
                                const Tolerances& tol = {}) {
  a.check_space(pm.space());
  double sum = 0.0;
  for (std::size_t h : a.histories()) sum += pm.probabilities[h];
  const Subspace ha = event_subspace(pm.analyser, pm.decomposition, a, tol);
  const double direct = ha.is_zero() ? 0.0 : (ha.basis().adjoint() * pm.state).squaredNorm();
  if (std::abs(sum - direct) > tol.probability()) {
    throw ConsistencyViolation("event probability: sum " + std::to_string(sum) +
                               " vs ||p_A phi||^2 " + std::to_string(direct));
  }
  return sum;
}

/// P_φ(B | A), cross-checked against the measure of the projected state p_A φ.
inline double conditional_probability(const Analyser& an, const CommutantDecomposition& dec,
                                      const CVector& phi, const Event& a, const Event& b,
                                      const Tolerances& tol = {}) {
  const PathMeasure pm = make_path_measure(an, dec, phi, tol);
  const double pa = event_probability(pm, a, tol);
  if (pa <= tol.probability()) throw ValidationError("conditioning on a null event");
  const double ratio = event_probability(pm, a & b, tol) / pa;
  const CVector projected = event_projector(dec, a).matrix() * pm.state;
  const PathMeasure fresh = make_path_measure(an, dec, projected, tol);
  const double direct = event_probability(fresh, b, tol);
  if (std::abs(ratio - direct) > tol.probability()) {
    throw ConsistencyViolation("conditional formula: ratio " + std::to_string(ratio) +
                               " vs projected-state measure " + std::to_string(direct));
  }
  return ratio;
}

struct Observable {
  std::vector<double> values;  // f(ω), indexed by history
  CMatrix op;                  // Σ_ω f(ω) p_ω
};

inline Observable observable(const Analyser& an, const CommutantDecomposition& dec,
                             const std::map<std::size_t, double>& f) {
  require_same_dim(an.dim(), dec.dim(), "observable");
  Observable obs{std::vector<double>(dec.space.size(), 0.0),
                 CMatrix::Zero(an.dim(), an.dim())};
  for (std::size_t h = 0; h < dec.space.size(); ++h) {
    auto it = f.find(h);
    if (it == f.end() || !std::isfinite(it->second)) {
      throw ValidationError("observable: f undefined on history " + dec.space.describe(h));
    }
    obs.values[h] = it->second;
  }
  for (const auto& [h, s] : dec.joint_table) obs.op += obs.values[h] * s.projector_matrix();
  return obs;
}

inline Observable observable(const Analyser& an, const CommutantDecomposition& dec,
                             std::span<const double> f) {
  std::map<std::size_t, double> table;
  for (std::size_t h = 0; h < f.size(); ++h) table[h] = f[h];
  return observable(an, dec, table);
}

/// ⟨φ̂, Q_f φ̂⟩.
inline double expectation(const Observable& obs, const CVector& phi) {
  const CVector hat = phi / phi.norm();
  return hat.dot(obs.op * hat).real();
}

/// ∫ f dP_φ.
inline double integral(const Observable& obs, const PathMeasure& pm) {
  double s = 0.0;
  for (std::size_t h = 0; h < pm.probabilities.size(); ++h) {
    s += obs.values[h] * pm.probabilities[h];
  }
  return s;
}

/// p_{f ∈ B} for B given as a predicate on values.
template <class Pred>
Projector spectral_projector(const Observable& obs, const CommutantDecomposition& dec,
                             Pred in_b) {
  std::vector<std::size_t> hs;
  for (std::size_t h = 0; h < obs.values.size(); ++h) {
    if (in_b(obs.values[h])) hs.push_back(h);
  }
  return event_projector(dec, Event::from_histories(dec.space, hs));
}

/// ||p_pi [Q_f, Q_g] p_pi||.
inline double restricted_commutator(const Observable& f, const Observable& g,
                                    const CommutantDecomposition& dec) {
  const CMatrix& p = dec.p_pi.matrix();
  return op_norm(p * (f.op * g.op - g.op * f.op) * p);
}

struct SigmaIdealReport {
  std::size_t checks = 0;
  std::size_t violations = 0;
  std::size_t null_events = 0;
  [[nodiscard]] bool passed() const { return violations == 0; }
};

/// Null events {A : P(A) = 0} are closed under subsets and finite unions, and
/// an intersection with a null event is null.
inline SigmaIdealReport sigma_ideal_checks(const PathMeasure& pm,
                                           const std::vector<Event>& events,
                                           const Tolerances& tol = {}) {
  SigmaIdealReport rep;
  const double zero = tol.probability();
  std::vector<double> p;
  for (const auto& e : events) p.push_back(event_probability(pm, e, tol));
  auto check = [&](bool ok) {
    ++rep.checks;
    if (!ok) ++rep.violations;
  };
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (p[i] >= zero) continue;
    ++rep.null_events;
    for (std::size_t h : events[i].histories()) check(pm.probabilities[h] < zero);
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    for (std::size_t j = 0; j < events.size(); ++j) {
      if (i == j) continue;
      if (events[i].subset_of(events[j]) && p[j] < zero) check(p[i] < zero);
      if (p[i] < zero && p[j] < zero) {
        check(event_probability(pm, events[i] | events[j], tol) < zero);
      }
      if (p[i] < zero) check(event_probability(pm, events[i] & events[j], tol) < zero);
    }
  }
  return rep;
}

}  // namespace histlab
