#pragma once

// Dense complex subspace calculus: projectors, orthonormal bases, meets,
// complements, projector distances and unitary evolution generated by a
// Hermitian matrix.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "histlab/core.hpp"

namespace histlab {

inline double hermitian_defect(const CMatrix& m) {
  return (m - m.adjoint()).norm();
}

/// Largest singular value.
inline double op_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

/// Operator norm of a Hermitian matrix (largest |eigenvalue|).
inline double hermitian_op_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

class Subspace {
 public:
  /// Takes ownership of a basis with orthonormal columns; throws if the columns
  /// are not orthonormal within tolerance.
  explicit Subspace(CMatrix basis, const Tolerances& tol = {})
      : basis_(std::move(basis)) {
    const Index k = basis_.cols();
    if (basis_.rows() <= 0) throw ValidationError("subspace: ambient dimension must be positive");
    if (k > 0) {
      const double err =
          (basis_.adjoint() * basis_ - CMatrix::Identity(k, k)).norm();
      if (err > tol.op(basis_.rows())) {
        throw ValidationError("subspace: basis columns are not orthonormal (residual " +
                              std::to_string(err) + ")");
      }
    }
  }

  static Subspace zero(Index ambient) { return Subspace(CMatrix(ambient, 0)); }
  static Subspace full(Index ambient) {
    return Subspace(CMatrix::Identity(ambient, ambient));
  }

  [[nodiscard]] Index ambient_dim() const { return basis_.rows(); }
  [[nodiscard]] Index dim() const { return basis_.cols(); }
  [[nodiscard]] bool is_zero() const { return basis_.cols() == 0; }
  [[nodiscard]] const CMatrix& basis() const { return basis_; }

  [[nodiscard]] CMatrix projector_matrix() const {
    if (is_zero()) return CMatrix::Zero(ambient_dim(), ambient_dim());
    return basis_ * basis_.adjoint();
  }

  /// Orthogonal projection of v onto the subspace.
  [[nodiscard]] CVector project(const CVector& v) const {
    require_same_dim(v.size(), ambient_dim(), "Subspace::project");
    if (is_zero()) return CVector::Zero(v.size());
    return basis_ * (basis_.adjoint() * v);
  }

 private:
  CMatrix basis_;
};

class Projector {
 public:
  /// Validates Hermitian + idempotent within tol.op(dim).
  static Projector from_matrix(CMatrix m, const Tolerances& tol = {}) {
    if (m.rows() != m.cols() || m.rows() == 0) {
      throw DimensionMismatch("projector: matrix must be square and non-empty");
    }
    const Index d = m.rows();
    const double herm = hermitian_defect(m);
    if (herm > tol.op(d)) {
      throw ValidationError("projector: matrix is not Hermitian (residual " +
                            std::to_string(herm) + ")");
    }
    const double idem = (m * m - m).norm();
    if (idem > tol.op(d)) {
      throw ValidationError("projector: matrix is not idempotent (residual " +
                            std::to_string(idem) + ")");
    }
    const double tr = m.trace().real();
    const double rank = std::round(tr);
    if (std::abs(tr - rank) > tol.op(d)) {
      throw ValidationError("projector: trace is not an integer");
    }
    return Projector(std::move(m), static_cast<Index>(rank));
  }

  static Projector from_subspace(const Subspace& s) {
    return Projector(s.projector_matrix(), s.dim());
  }
  static Projector zero(Index d) { return Projector(CMatrix::Zero(d, d), 0); }
  static Projector identity(Index d) {
    return Projector(CMatrix::Identity(d, d), d);
  }
  /// Projector onto the span of the listed coordinate axes.
  static Projector coordinates(Index d, std::span<const Index> indices) {
    CMatrix m = CMatrix::Zero(d, d);
    for (Index i : indices) {
      if (i < 0 || i >= d) {
        throw ValidationError("projector: coordinate index " + std::to_string(i) +
                              " out of range for dimension " + std::to_string(d));
      }
      m(i, i) = 1.0;
    }
    const Index rank = static_cast<Index>(m.diagonal().real().sum() + 0.5);
    return Projector(std::move(m), rank);
  }

  [[nodiscard]] Index dim() const { return matrix_.rows(); }
  [[nodiscard]] Index rank() const { return rank_; }
  [[nodiscard]] bool is_zero() const { return rank_ == 0; }
  [[nodiscard]] const CMatrix& matrix() const { return matrix_; }
  [[nodiscard]] CVector apply(const CVector& v) const {
    require_same_dim(v.size(), dim(), "Projector::apply");
    return matrix_ * v;
  }

 private:
  Projector(CMatrix m, Index rank) : matrix_(std::move(m)), rank_(rank) {}

  CMatrix matrix_;
  Index rank_ = 0;
};

// Eigenvectors of a Hermitian matrix whose eigenvalues satisfy `keep`.
template <class Keep>
Subspace eigen_select(const CMatrix& hermitian, Keep keep) {
  const Index d = hermitian.rows();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian);
  std::vector<Index> cols;
  for (Index i = 0; i < d; ++i) {
    if (keep(es.eigenvalues()(i))) cols.push_back(i);
  }
  CMatrix basis(d, static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    basis.col(static_cast<Index>(j)) = es.eigenvectors().col(cols[j]);
  }
  return Subspace(std::move(basis));
}

/// Range of a projector, as an orthonormal basis.
inline Subspace range_of(const Projector& p) {
  if (p.is_zero()) return Subspace::zero(p.dim());
  return eigen_select(p.matrix(), [](double ev) { return ev > 0.5; });
}

/// Orthonormal basis of the column space of `columns`; numerically dependent
/// columns are dropped at the rank threshold.
inline Subspace span_of_columns(const CMatrix& columns, const Tolerances& tol = {}) {
  const Index d = columns.rows();
  if (d <= 0) throw DimensionMismatch("orthonormalize: ambient dimension must be positive");
  if (columns.cols() == 0) return Subspace::zero(d);
  Eigen::JacobiSVD<CMatrix> svd(columns, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double thresh =
      tol.rank_threshold(std::max(columns.rows(), columns.cols()), sv(0));
  Index rank = 0;
  while (rank < sv.size() && sv(rank) > thresh) ++rank;
  return Subspace(svd.matrixU().leftCols(rank));
}

inline Subspace orthonormalize(std::span<const CVector> vectors,
                               const Tolerances& tol = {}) {
  if (vectors.empty()) {
    throw ValidationError("orthonormalize: at least one vector is required");
  }
  const Index d = vectors.front().size();
  CMatrix cols(d, static_cast<Index>(vectors.size()));
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    require_same_dim(vectors[j].size(), d, "orthonormalize");
    cols.col(static_cast<Index>(j)) = vectors[j];
  }
  return span_of_columns(cols, tol);
}

/// Projector onto Range(p) ∩ Range(q): kernel of the positive semidefinite
/// operator (I - p) + (I - q).
inline Projector meet(const Projector& p, const Projector& q,
                      const Tolerances& tol = {}) {
  require_same_dim(p.dim(), q.dim(), "meet");
  const Index d = p.dim();
  if (p.is_zero() || q.is_zero()) return Projector::zero(d);
  const CMatrix m = 2.0 * CMatrix::Identity(d, d) - p.matrix() - q.matrix();
  const double cut = tol.meet;
  Subspace s = eigen_select(m, [cut](double ev) { return ev < cut; });
  return Projector::from_subspace(s);
}

inline Subspace intersect(const Subspace& a, const Subspace& b,
                          const Tolerances& tol = {}) {
  return range_of(meet(Projector::from_subspace(a), Projector::from_subspace(b), tol));
}

/// Smallest subspace containing both.
inline Subspace join(const Subspace& a, const Subspace& b, const Tolerances& tol = {}) {
  require_same_dim(a.ambient_dim(), b.ambient_dim(), "join");
  CMatrix cols(a.ambient_dim(), a.dim() + b.dim());
  cols << a.basis(), b.basis();
  return span_of_columns(cols, tol);
}

inline Subspace complement(const Subspace& s) {
  const Index d = s.ambient_dim();
  if (s.is_zero()) return Subspace::full(d);
  if (s.dim() == d) return Subspace::zero(d);
  Eigen::HouseholderQR<CMatrix> qr(s.basis());
  CMatrix q = qr.householderQ() * CMatrix::Identity(d, d);
  return Subspace(q.rightCols(d - s.dim()));
}

/// Operator norm of the difference of the two orthogonal projectors.
inline double subspace_distance(const Subspace& a, const Subspace& b) {
  require_same_dim(a.ambient_dim(), b.ambient_dim(), "subspace_distance");
  return hermitian_op_norm(a.projector_matrix() - b.projector_matrix());
}

/// ||(I - P_outer) B_inner||; zero iff inner ⊆ outer.
inline double containment_residual(const Subspace& outer, const Subspace& inner) {
  require_same_dim(outer.ambient_dim(), inner.ambient_dim(), "containment_residual");
  if (inner.is_zero()) return 0.0;
  const CMatrix r = inner.basis() - outer.projector_matrix() * inner.basis();
  return op_norm(r);
}

inline bool contains(const Subspace& outer, const Subspace& inner,
                     const Tolerances& tol = {}) {
  return containment_residual(outer, inner) < tol.op(outer.ambient_dim());
}

/// U_t = exp(-i t H) through the eigendecomposition H = V diag(λ) V†.
inline CMatrix hermitian_evolution(const CMatrix& h, double t,
                                   const Tolerances& tol = {}) {
  if (h.rows() != h.cols() || h.rows() == 0) {
    throw DimensionMismatch("hermitian_evolution: generator must be square and non-empty");
  }
  const double herm = hermitian_defect(h);
  if (herm > tol.op(h.rows())) {
    throw ValidationError("hermitian_evolution: generator is not Hermitian (residual " +
                          std::to_string(herm) + ")");
  }
  const CMatrix sym = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(sym);
  const CVector phases = (es.eigenvalues().cast<Complex>() * Complex(0.0, -t))
                             .array()
                             .exp()
                             .matrix();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

enum class ChainDirection { increasing, decreasing };

inline ChainDirection chain_direction(std::span<const Subspace> chain,
                                      const Tolerances& tol = {}) {
  if (chain.empty()) throw ValidationError("projector chain is empty");
  bool inc = true;
  bool dec = true;
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    require_same_dim(chain[i].ambient_dim(), chain[i + 1].ambient_dim(), "projector chain");
    inc = inc && contains(chain[i + 1], chain[i], tol);
    dec = dec && contains(chain[i], chain[i + 1], tol);
  }
  if (inc) return ChainDirection::increasing;
  if (dec) return ChainDirection::decreasing;
  throw ValidationError("projector chain is not nested");
}

/// p_i φ for each element of a nested (increasing or decreasing) chain.
inline std::vector<CVector> monotone_projector_limit(std::span<const Subspace> chain,
                                                     const CVector& phi,
                                                     const Tolerances& tol = {}) {
  chain_direction(chain, tol);
  std::vector<CVector> out;
  out.reserve(chain.size());
  for (const auto& s : chain) out.push_back(s.project(phi));
  return out;
}

}  // namespace histlab
