#pragma once

// Lifting events along a refinement (A -> A') and checking
// p_{A'} = p_A p_{pi'} = p_{pi'} p_A.

#include <algorithm>
#include <string>
#include <vector>

#include "histlab/commutant.hpp"

namespace histlab {

struct RefinedEvent {
  Event parent_event;
  Event child_event;
};

/// A' = {ω' : the parent labels owning ω' at the parent times form a history in A}.
/// Child times absent from the parent are unconstrained.
inline RefinedEvent refine_event(const RefinementMap& rm, const Event& a) {
  const HistorySpace ps(rm.parent);
  const HistorySpace cs(rm.child);
  a.check_space(ps);
  std::vector<std::size_t> members;
  std::vector<std::size_t> parent_labels(rm.parent.num_times());
  for (std::size_t h = 0; h < cs.size(); ++h) {
    const auto ls = cs.decode(h);
    for (std::size_t i = 0; i < rm.parent.num_times(); ++i) {
      parent_labels[i] = rm.parent_label(i, ls[rm.child_time[i]]);
    }
    if (a.contains(ps.encode(parent_labels))) members.push_back(h);
  }
  return {a, Event::from_histories(cs, members)};
}

struct RefinementEventResidual {
  double operator_residual = 0.0;     // ||p_{A'} - p_A p_{pi'}||
  double commutation_residual = 0.0;  // ||p_A p_{pi'} - p_{pi'} p_A||
  double subspace_residual = 0.0;     // d(H_{A'}, H_A ∩ H_{pi'})
};

struct RefinementReport {
  std::vector<RefinementEventResidual> events;
  double hpi_containment = 0.0;  // H_{pi'} ⊆ H_pi
  double max_residual = 0.0;
  bool passed = true;
};

inline RefinementReport check_refinement_theorem(const RefinementMap& rm,
                                                 const CommutantDecomposition& parent_dec,
                                                 const CommutantDecomposition& child_dec,
                                                 const std::vector<Event>& events,
                                                 const Tolerances& tol = {}) {
  RefinementReport rep;
  const Index d = rm.parent.dim();
  const CMatrix& ppi_child = child_dec.p_pi.matrix();
  rep.hpi_containment = containment_residual(parent_dec.h_pi, child_dec.h_pi);
  rep.max_residual = rep.hpi_containment;
  for (const auto& a : events) {
    const RefinedEvent re = refine_event(rm, a);
    const CMatrix pa = event_projector(parent_dec, a).matrix();
    const CMatrix pa_child = event_projector(child_dec, re.child_event).matrix();
    RefinementEventResidual r;
    r.operator_residual = op_norm(pa_child - pa * ppi_child);
    r.commutation_residual = op_norm(pa * ppi_child - ppi_child * pa);
    const Subspace lhs = event_subspace(rm.child, child_dec, re.child_event, tol);
    const Subspace rhs =
        intersect(event_subspace(rm.parent, parent_dec, a, tol), child_dec.h_pi, tol);
    r.subspace_residual = subspace_distance(lhs, rhs);
    rep.max_residual = std::max({rep.max_residual, r.operator_residual,
                                 r.commutation_residual, r.subspace_residual});
    rep.events.push_back(r);
  }
  rep.passed = rep.max_residual < tol.op(d);
  return rep;
}

}  // namespace histlab
