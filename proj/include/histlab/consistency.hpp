#pragma once

// Two-time consistency defect Σ_a p^s_a p^t_b (I - p^s_a), commutator
// diagnostics, and the exceptional two-time measure for a state lying inside
// a single early cell.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "histlab/analyser.hpp"

namespace histlab {

/// ||Σ_a p^s_a p^t_b (I - p^s_a)||, s strictly earlier than t.
inline double consistency_defect(const Analyser& an, const Time& s, const Time& t,
                                 const std::string& b) {
  const std::size_t si = an.time_index(s);
  const std::size_t ti = an.time_index(t);
  if (!(si < ti)) throw ValidationError("consistency_defect: s must precede t");
  const Index d = an.dim();
  const CMatrix& pb = an.cell(ti, an.label_index(ti, b)).matrix();
  const CMatrix id = CMatrix::Identity(d, d);
  CMatrix sum = CMatrix::Zero(d, d);
  for (const auto& c : an.partition(si).cells()) {
    sum += c.matrix() * pb * (id - c.matrix());
  }
  return op_norm(sum);
}

/// |Σ_a ||p^t_b p^s_a φ̂||² - ||p^t_b φ̂||²|.
inline double additivity_residual(const Analyser& an, const Time& s, const Time& t,
                                  const std::string& b, const CVector& phi) {
  require_same_dim(phi.size(), an.dim(), "additivity_residual");
  if (!(phi.norm() > 0.0)) throw ValidationError("additivity_residual: state is zero");
  const CVector hat = phi / phi.norm();
  const std::size_t si = an.time_index(s);
  const std::size_t ti = an.time_index(t);
  const CMatrix& pb = an.cell(ti, an.label_index(ti, b)).matrix();
  double lhs = 0.0;
  for (const auto& c : an.partition(si).cells()) lhs += (pb * (c.matrix() * hat)).squaredNorm();
  return std::abs(lhs - (pb * hat).squaredNorm());
}

struct DefectEntry {
  Time s;
  Time t;
  std::string label;
  double norm = 0.0;
};

struct DefectReport {
  std::vector<DefectEntry> defects;
  double max_defect = 0.0;
  double max_commutator = 0.0;
  bool commuting = true;
  double tolerance = 0.0;
};

inline DefectReport defect_report(const Analyser& an, const Tolerances& tol = {}) {
  DefectReport rep;
  rep.tolerance = tol.op(an.dim());
  for (std::size_t si = 0; si < an.num_times(); ++si) {
    for (std::size_t ti = si + 1; ti < an.num_times(); ++ti) {
      const Partition& ps = an.partition(si);
      const Partition& pt = an.partition(ti);
      for (const auto& b : pt.labels()) {
        const double n = consistency_defect(an, an.time(si), an.time(ti), b);
        rep.defects.push_back({an.time(si), an.time(ti), b, n});
        rep.max_defect = std::max(rep.max_defect, n);
      }
      for (const auto& p : ps.cells()) {
        for (const auto& q : pt.cells()) {
          const CMatrix c = p.matrix() * q.matrix() - q.matrix() * p.matrix();
          rep.max_commutator = std::max(rep.max_commutator, op_norm(c));
        }
      }
    }
  }
  rep.commuting = rep.max_defect < rep.tolerance && rep.max_commutator < rep.tolerance;
  return rep;
}

struct TwoTimeTable {
  std::vector<std::string> labels_s;
  std::vector<std::string> labels_t;
  /// probability(a, b) = P(X_s = a, X_t = b)
  Eigen::MatrixXd probability;
  /// ||p^t_b p^s_a φ̂||², which must coincide with `probability`.
  Eigen::MatrixXd ordered_born;
};

/// The table ||p^t_b φ̂||² δ_{a,c} for φ inside the time-s cell c.
inline TwoTimeTable exceptional_two_time_measure(const Analyser& an, const Time& s,
                                                 const Time& t, const CVector& phi,
                                                 const std::string& c,
                                                 const Tolerances& tol = {}) {
  require_same_dim(phi.size(), an.dim(), "exceptional_two_time_measure");
  if (!(phi.norm() > 0.0)) throw ValidationError("exceptional_two_time_measure: state is zero");
  const CVector hat = phi / phi.norm();
  const std::size_t si = an.time_index(s);
  const std::size_t ti = an.time_index(t);
  const std::size_t ci = an.label_index(si, c);
  const Index d = an.dim();
  if ((an.cell(si, ci).matrix() * hat - hat).norm() >= tol.vec(d)) {
    throw ValidationError("state does not lie in the cell '" + c + "' at time " + s.label());
  }
  const Partition& ps = an.partition(si);
  const Partition& pt = an.partition(ti);
  TwoTimeTable tab{ps.labels(), pt.labels(),
                   Eigen::MatrixXd::Zero(static_cast<Index>(ps.size()),
                                         static_cast<Index>(pt.size())),
                   Eigen::MatrixXd::Zero(static_cast<Index>(ps.size()),
                                         static_cast<Index>(pt.size()))};
  for (std::size_t b = 0; b < pt.size(); ++b) {
    const double pb = (pt.cell(b).matrix() * hat).squaredNorm();
    tab.probability(static_cast<Index>(ci), static_cast<Index>(b)) = pb;
    for (std::size_t a = 0; a < ps.size(); ++a) {
      tab.ordered_born(static_cast<Index>(a), static_cast<Index>(b)) =
          (pt.cell(b).matrix() * (ps.cell(a).matrix() * hat)).squaredNorm();
    }
  }
  const double p = tol.probability();
  if (std::abs(tab.probability.sum() - 1.0) > p) {
    throw ConsistencyViolation("exceptional measure does not sum to 1");
  }
  for (std::size_t a = 0; a < ps.size(); ++a) {
    const double row = tab.probability.row(static_cast<Index>(a)).sum();
    const double born = (ps.cell(a).matrix() * hat).squaredNorm();
    if (std::abs(row - born) > p) {
      throw ConsistencyViolation("exceptional measure: time-s marginal mismatch");
    }
  }
  for (std::size_t b = 0; b < pt.size(); ++b) {
    const double col = tab.probability.col(static_cast<Index>(b)).sum();
    const double born = (pt.cell(b).matrix() * hat).squaredNorm();
    if (std::abs(col - born) > p) {
      throw ConsistencyViolation("exceptional measure: time-t marginal mismatch");
    }
  }
  if ((tab.probability - tab.ordered_born).cwiseAbs().maxCoeff() > p) {
    throw ConsistencyViolation("exceptional measure disagrees with the ordered Born product");
  }
  return tab;
}

}  // namespace histlab
