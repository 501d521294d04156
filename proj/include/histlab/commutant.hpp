#pragma once

// Joint history projectors, the commutation subspace H_pi and its complement
// N, event subspaces H_A and the kernels F_A, N_A.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "histlab/analyser.hpp"
#include "histlab/history_space.hpp"
#include "histlab/linalg.hpp"

namespace histlab {

inline constexpr std::size_t kDefaultHistoryBudget = 65536;
inline constexpr std::size_t kMaxWitnessTimes = 12;

struct JointProjector {
  std::vector<Time> times;
  std::vector<std::string> labels;
  Projector projector;
};

namespace detail {

// Iterated meet over (time index, label index) pairs in the given order, with
// early exit once the running meet vanishes.
inline Projector iterated_meet(const Analyser& an,
                               std::span<const std::pair<std::size_t, std::size_t>> cells,
                               const Tolerances& tol) {
  Projector acc = Projector::identity(an.dim());
  for (const auto& [ti, a] : cells) {
    acc = meet(acc, an.cell(ti, a), tol);
    if (acc.is_zero()) break;
  }
  return acc;
}

}  // namespace detail

/// Projector onto ∩_i Range(p^{t_i}_{a_i}); the empty assignment gives I.
inline JointProjector joint_projector(const Analyser& an, const Assignment& assignment,
                                      const Tolerances& tol = {}) {
  const auto cells = an.resolve(assignment);
  JointProjector jp{{}, {}, detail::iterated_meet(an, cells, tol)};
  for (const auto& [t, l] : assignment) {
    jp.times.push_back(t);
    jp.labels.push_back(l);
  }
  return jp;
}

struct CommutantDecomposition {
  HistorySpace space;
  Subspace h_pi;
  Subspace n_space;
  Projector p_pi;
  /// Ranges of the nonzero full-history joint projectors; absent histories
  /// have zero joint projector.
  std::map<std::size_t, Subspace> joint_table;
  std::size_t nodes_visited = 0;

  [[nodiscard]] Index dim() const { return h_pi.ambient_dim(); }

  [[nodiscard]] Projector joint(std::size_t history) const {
    auto it = joint_table.find(history);
    if (it == joint_table.end()) return Projector::zero(dim());
    return Projector::from_subspace(it->second);
  }
};

/// Enumerates Ω depth-first in time order, pruning below zero meets.
inline CommutantDecomposition compute_commutant(const Analyser& an,
                                                std::size_t budget = kDefaultHistoryBudget,
                                                const Tolerances& tol = {}) {
  HistorySpace space(an);
  if (space.size() > budget) {
    throw BudgetExceeded("history space has " + std::to_string(space.size()) +
                         " histories, budget is " + std::to_string(budget));
  }
  const Index d = an.dim();
  const std::size_t k = an.num_times();
  std::map<std::size_t, Subspace> table;
  std::size_t visited = 0;

  struct Frame {
    std::size_t depth;
    std::size_t prefix;
    Projector acc;
  };
  std::vector<Frame> stack;
  stack.push_back({0, 0, Projector::identity(d)});
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    ++visited;
    if (f.depth == k) {
      table.emplace(f.prefix, range_of(f.acc));
      continue;
    }
    const std::size_t r = space.radix(f.depth);
    // Push in reverse so labels are expanded in ascending order.
    for (std::size_t a = r; a-- > 0;) {
      Projector next = meet(f.acc, an.cell(f.depth, a), tol);
      if (next.is_zero()) continue;
      stack.push_back({f.depth + 1, f.prefix * r + a, std::move(next)});
    }
  }

  CMatrix cols(d, 0);
  CMatrix sum = CMatrix::Zero(d, d);
  for (const auto& [h, s] : table) {
    CMatrix grown(d, cols.cols() + s.dim());
    grown << cols, s.basis();
    cols = std::move(grown);
    sum += s.projector_matrix();
  }
  Subspace h_pi = span_of_columns(cols, tol);
  // Σ_ω p_ω is a projector, so its kernel is cleanly separated at 1/2.
  Subspace n_space = eigen_select(0.5 * (sum + sum.adjoint()),
                                  [](double ev) { return ev < 0.5; });
  Projector p_pi = Projector::from_subspace(h_pi);
  return CommutantDecomposition{std::move(space), std::move(h_pi), std::move(n_space),
                                std::move(p_pi), std::move(table), visited};
}

struct HpiReport {
  double max_ordered_residual = 0.0;
  double max_permutation_residual = 0.0;
  double complement_distance = 0.0;
  std::size_t vectors_checked = 0;
  std::size_t products_checked = 0;
  bool passed = true;
};

/// Checks H_pi'' = H_pi' = H_pi = N^⊥ on the basis vectors of dec.h_pi: ordered
/// products agree with joint projectors, random reorderings agree with the
/// ordered product, and h_pi coincides with the complement of n_space.
inline HpiReport check_hpi_characterizations(const Analyser& an,
                                             const CommutantDecomposition& dec,
                                             std::size_t n_perms, std::uint64_t seed = 0,
                                             const Tolerances& tol = {}) {
  HpiReport rep;
  const Index d = an.dim();
  rep.complement_distance = subspace_distance(dec.h_pi, complement(dec.n_space));
  const std::size_t k = an.num_times();
  if (k > kMaxWitnessTimes) {
    throw ValidationError("check_hpi_characterizations: too many times");
  }
  const CMatrix& basis = dec.h_pi.basis();
  rep.vectors_checked = static_cast<std::size_t>(basis.cols());
  if (basis.cols() > 0) {
    std::mt19937_64 rng(seed);
    for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
      std::vector<std::size_t> ts;
      for (std::size_t i = 0; i < k; ++i) {
        if (mask & (1u << i)) ts.push_back(i);
      }
      std::vector<std::size_t> labels(ts.size(), 0);
      while (true) {
        std::vector<std::pair<std::size_t, std::size_t>> cells;
        for (std::size_t j = 0; j < ts.size(); ++j) cells.emplace_back(ts[j], labels[j]);
        const Projector joint = detail::iterated_meet(an, cells, tol);
        const CMatrix jv = joint.matrix() * basis;
        auto product = [&](const std::vector<std::size_t>& order) {
          CMatrix v = basis;
          for (std::size_t j = order.size(); j-- > 0;) {
            const auto& [ti, a] = cells[order[j]];
            v = an.cell(ti, a).matrix() * v;
          }
          return v;
        };
        std::vector<std::size_t> order(cells.size());
        std::iota(order.begin(), order.end(), 0);
        const CMatrix ordered = product(order);
        rep.max_ordered_residual =
            std::max(rep.max_ordered_residual, (ordered - jv).colwise().norm().maxCoeff());
        for (std::size_t p = 0; p < n_perms; ++p) {
          std::shuffle(order.begin(), order.end(), rng);
          const CMatrix permuted = product(order);
          rep.max_permutation_residual = std::max(
              rep.max_permutation_residual, (permuted - ordered).colwise().norm().maxCoeff());
        }
        ++rep.products_checked;
        std::size_t j = 0;
        while (j < ts.size() && ++labels[j] == an.partition(ts[j]).size()) labels[j++] = 0;
        if (j == ts.size()) break;
      }
    }
  }
  rep.passed = rep.max_ordered_residual < tol.vec(d) &&
               rep.max_permutation_residual < tol.vec(d) &&
               rep.complement_distance < tol.op(d);
  return rep;
}

/// p_A = Σ_{ω∈A} p_ω.
inline Projector event_projector(const CommutantDecomposition& dec, const Event& a) {
  a.check_space(dec.space);
  const Index d = dec.dim();
  CMatrix sum = CMatrix::Zero(d, d);
  Index rank = 0;
  for (const auto& [h, s] : dec.joint_table) {
    if (!a.contains(h)) continue;
    sum += s.projector_matrix();
    rank += s.dim();
  }
  if (rank == 0) return Projector::zero(d);
  return Projector::from_matrix(0.5 * (sum + sum.adjoint()));
}

/// H_A = ⊕_{ω∈A} Range(p_ω).
inline Subspace event_subspace(const Analyser& an, const CommutantDecomposition& dec,
                               const Event& a, const Tolerances& tol = {}) {
  a.check_space(dec.space);
  require_same_dim(an.dim(), dec.dim(), "event_subspace");
  CMatrix cols(an.dim(), 0);
  for (const auto& [h, s] : dec.joint_table) {
    if (!a.contains(h)) continue;
    CMatrix grown(an.dim(), cols.cols() + s.dim());
    grown << cols, s.basis();
    cols = std::move(grown);
  }
  return span_of_columns(cols, tol);
}

/// F_A = Kernel(Σ_{ω∈A} p_ω).
inline Subspace fa_kernel(const Analyser& an, const CommutantDecomposition& dec,
                          const Event& a) {
  a.check_space(dec.space);
  require_same_dim(an.dim(), dec.dim(), "fa_kernel");
  const Index d = an.dim();
  CMatrix sum = CMatrix::Zero(d, d);
  for (const auto& [h, s] : dec.joint_table) {
    if (a.contains(h)) sum += s.projector_matrix();
  }
  return eigen_select(0.5 * (sum + sum.adjoint()), [](double ev) { return ev < 0.5; });
}

inline Subspace fa_kernel(const Analyser& an, const Event& a, const Tolerances& tol = {}) {
  return fa_kernel(an, compute_commutant(an, kDefaultHistoryBudget, tol), a);
}

struct NaWitness {
  bool member = false;
  std::vector<Time> times;
};

/// Searches time subsets in increasing size for one whose restricted joint
/// projectors annihilate φ uniformly over A.
inline NaWitness na_member(const Analyser& an, const Event& a, const CVector& phi,
                           const Tolerances& tol = {}) {
  require_same_dim(phi.size(), an.dim(), "na_member");
  const HistorySpace space(an);
  a.check_space(space);
  const std::size_t k = an.num_times();
  if (k > kMaxWitnessTimes) {
    throw ValidationError("na_member: at most " + std::to_string(kMaxWitnessTimes) +
                          " times are supported");
  }
  const double zero = tol.vec(an.dim());
  const auto members = a.histories();
  std::vector<std::uint32_t> masks((std::size_t{1} << k));
  std::iota(masks.begin(), masks.end(), 0u);
  std::stable_sort(masks.begin(), masks.end(), [](std::uint32_t x, std::uint32_t y) {
    return std::popcount(x) < std::popcount(y);
  });
  for (std::uint32_t mask : masks) {
    std::set<std::vector<std::size_t>> restricted;
    for (std::size_t h : members) {
      const auto ls = space.decode(h);
      std::vector<std::size_t> r;
      for (std::size_t i = 0; i < k; ++i) {
        if (mask & (1u << i)) r.push_back(ls[i]);
      }
      restricted.insert(std::move(r));
    }
    bool all_zero = true;
    for (const auto& r : restricted) {
      std::vector<std::pair<std::size_t, std::size_t>> cells;
      std::size_t j = 0;
      for (std::size_t i = 0; i < k; ++i) {
        if (mask & (1u << i)) cells.emplace_back(i, r[j++]);
      }
      const Projector p = detail::iterated_meet(an, cells, tol);
      if ((p.matrix() * phi).norm() >= zero) {
        all_zero = false;
        break;
      }
    }
    if (all_zero) {
      NaWitness w{true, {}};
      for (std::size_t i = 0; i < k; ++i) {
        if (mask & (1u << i)) w.times.push_back(an.time(i));
      }
      return w;
    }
  }
  return {};
}

}  // namespace histlab
