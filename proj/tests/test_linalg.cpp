#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "histlab/linalg.hpp"
#include "support/generators.hpp"

using namespace histlab;
using histlab::gen::Rng;

namespace {

CVector vec2(Complex a, Complex b) {
  CVector v(2);
  v << a, b;
  return v;
}

Projector diag(std::initializer_list<double> entries) {
  const Index d = static_cast<Index>(entries.size());
  CMatrix m = CMatrix::Zero(d, d);
  Index i = 0;
  for (double e : entries) m(i, i) = e, ++i;
  return Projector::from_matrix(m);
}

// exp(-itH) by truncated Taylor series; independent of the eigensolver path.
CMatrix series_exp(const CMatrix& h, double t, int terms = 60) {
  const Index d = h.rows();
  const CMatrix a = Complex(0.0, -t) * h;
  CMatrix term = CMatrix::Identity(d, d);
  CMatrix sum = term;
  for (int k = 1; k < terms; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

}  // namespace

TEST(Orthonormalize, AlreadyOrthonormal) {
  const std::vector<CVector> vs{vec2(1, 0), vec2(0, 1)};
  const Subspace s = orthonormalize(vs);
  EXPECT_EQ(s.dim(), 2);
  EXPECT_LT((s.projector_matrix() - CMatrix::Identity(2, 2)).norm(), 1e-14);
}

TEST(Orthonormalize, DuplicateDropped) {
  const std::vector<CVector> vs{vec2(1, 0), vec2(1, 0)};
  const Subspace s = orthonormalize(vs);
  ASSERT_EQ(s.dim(), 1);
  EXPECT_NEAR(std::abs(s.basis()(0, 0)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(s.basis()(1, 0)), 0.0, 1e-14);
}

TEST(Orthonormalize, SkewPairSpansPlane) {
  const double r = 1.0 / std::sqrt(2.0);
  const std::vector<CVector> vs{vec2(r, r), vec2(1, 0)};
  const Subspace s = orthonormalize(vs);
  ASSERT_EQ(s.dim(), 2);
  // Direct assembly Σ_j b_j b_j†.
  CMatrix p = CMatrix::Zero(2, 2);
  for (Index j = 0; j < s.dim(); ++j) p += s.basis().col(j) * s.basis().col(j).adjoint();
  EXPECT_LT((p - CMatrix::Identity(2, 2)).norm(), 1e-14);
}

TEST(Orthonormalize, DimensionMismatchThrows) {
  const std::vector<CVector> vs{vec2(1, 0), CVector::Zero(3)};
  EXPECT_THROW(orthonormalize(vs), DimensionMismatch);
}

TEST(Meet, IdentityAbsorbs) {
  Rng rng(1);
  const CMatrix u = gen::random_unitary(4, rng);
  const Projector q = Projector::from_matrix(u.leftCols(2) * u.leftCols(2).adjoint());
  const Projector m = meet(Projector::identity(4), q);
  EXPECT_LT((m.matrix() - q.matrix()).norm(), 1e-12);
  EXPECT_EQ(m.rank(), 2);
}

TEST(Meet, CommutingDiagonals) {
  const Projector m = meet(diag({1, 1, 0, 0}), diag({1, 0, 1, 0}));
  EXPECT_LT((m.matrix() - diag({1, 0, 0, 0}).matrix()).norm(), 1e-14);
}

TEST(Meet, DistinctLinesInPlaneIntersectTrivially) {
  const double r = 1.0 / std::sqrt(2.0);
  const Projector p = diag({1, 0});
  const CVector v = vec2(r, r);
  const Projector q = Projector::from_matrix(v * v.adjoint());
  // Oracle: kernel dimension of the stacked system [(I-p); (I-q)].
  CMatrix stacked(4, 2);
  stacked << CMatrix::Identity(2, 2) - p.matrix(), CMatrix::Identity(2, 2) - q.matrix();
  Eigen::JacobiSVD<CMatrix> svd(stacked);
  Index kernel = 0;
  for (Index i = 0; i < svd.singularValues().size(); ++i) kernel += svd.singularValues()(i) < 1e-12;
  EXPECT_EQ(kernel, 0);
  EXPECT_TRUE(meet(p, q).is_zero());
}

TEST(Meet, DimensionMismatchThrows) {
  EXPECT_THROW(meet(Projector::identity(2), Projector::identity(3)), DimensionMismatch);
}

TEST(MeetProperty, BelowBothFactorsForArbitraryPairs) {
  Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const Index d = 6;
    // Force a common subspace of dimension 1 or 2 into otherwise random ranges.
    const CMatrix u = gen::random_unitary(d, rng);
    const Index common = 1 + trial % 2;
    CMatrix a(d, common + 1), b(d, common + 2);
    a << u.leftCols(common), u.col(common);
    b << u.leftCols(common), gen::random_gaussian(d, 2, rng);
    const Projector p = Projector::from_subspace(span_of_columns(a));
    const Projector q = Projector::from_subspace(span_of_columns(b));
    const Projector m = meet(p, q);
    EXPECT_EQ(m.rank(), common);
    EXPECT_LT((p.matrix() * m.matrix() - m.matrix()).norm(), 1e-10 * d);
    EXPECT_LT((q.matrix() * m.matrix() - m.matrix()).norm(), 1e-10 * d);
    EXPECT_LT((meet(q, p).matrix() - m.matrix()).norm(), 1e-10 * d);
  }
}

TEST(MeetProperty, CommutativeAndAssociativeOnCommutingTriples) {
  Rng rng(11);
  const Index d = 8;
  for (int trial = 0; trial < 30; ++trial) {
    const CMatrix u = gen::random_unitary(d, rng);
    std::bernoulli_distribution coin(0.6);
    auto random_diag_projector = [&] {
      CMatrix m = CMatrix::Zero(d, d);
      for (Index i = 0; i < d; ++i) m(i, i) = coin(rng) ? 1.0 : 0.0;
      const CMatrix r = u * m * u.adjoint();
      return Projector::from_matrix(0.5 * (r + r.adjoint()));
    };
    const Projector p = random_diag_projector();
    const Projector q = random_diag_projector();
    const Projector s = random_diag_projector();
    const double tol = 1e-10 * d;
    EXPECT_LT((meet(p, q).matrix() - meet(q, p).matrix()).norm(), tol);
    EXPECT_LT((meet(meet(p, q), s).matrix() - meet(p, meet(q, s)).matrix()).norm(), tol);
    // Commuting projectors meet in their product.
    EXPECT_LT((meet(p, q).matrix() - p.matrix() * q.matrix()).norm(), tol);
  }
}

TEST(Complement, ZeroAndLine) {
  EXPECT_EQ(complement(Subspace::zero(3)).dim(), 3);
  CMatrix e0 = CMatrix::Zero(2, 1);
  e0(0, 0) = 1.0;
  const Subspace c = complement(Subspace(e0));
  ASSERT_EQ(c.dim(), 1);
  EXPECT_NEAR(std::abs(c.basis()(1, 0)), 1.0, 1e-14);
}

TEST(ComplementProperty, InvolutionOrthogonalAndDimensionsAdd) {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const Index d = 2 + trial % 9;
    const Index k = trial % (d + 1);
    const Subspace s = span_of_columns(gen::random_gaussian(d, k, rng));
    const Subspace c = complement(s);
    EXPECT_EQ(s.dim() + c.dim(), d);
    if (!s.is_zero() && !c.is_zero()) {
      EXPECT_LT((s.basis().adjoint() * c.basis()).norm(), 1e-12);
    }
    EXPECT_LT(subspace_distance(complement(c), s), 1e-10 * d);
  }
}

TEST(SubspaceDistance, ElementaryCases) {
  CMatrix e0 = CMatrix::Zero(2, 1), e1 = CMatrix::Zero(2, 1), diagl(2, 1);
  e0(0, 0) = 1.0;
  e1(1, 0) = 1.0;
  diagl << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const Subspace a(e0), b(e1), c(diagl);
  EXPECT_NEAR(subspace_distance(a, a), 0.0, 1e-15);
  EXPECT_NEAR(subspace_distance(a, b), 1.0, 1e-15);
  // Principal angle between the lines: sin θ with cos θ = |<u, v>|.
  const double cos_theta = std::abs(e0.col(0).dot(diagl.col(0)));
  const double oracle = std::sqrt(1.0 - cos_theta * cos_theta);
  EXPECT_NEAR(subspace_distance(a, c), oracle, 1e-14);
  EXPECT_NEAR(oracle, std::sin(std::numbers::pi / 4.0), 1e-15);
}

TEST(SubspaceDistanceProperty, MetricAxioms) {
  Rng rng(5);
  const Index d = 6;
  for (int trial = 0; trial < 40; ++trial) {
    const Subspace a = span_of_columns(gen::random_gaussian(d, 1 + trial % 4, rng));
    const Subspace b = span_of_columns(gen::random_gaussian(d, 1 + (trial / 2) % 4, rng));
    const Subspace c = span_of_columns(gen::random_gaussian(d, 2, rng));
    EXPECT_NEAR(subspace_distance(a, b), subspace_distance(b, a), 1e-13);
    EXPECT_LE(subspace_distance(a, c), subspace_distance(a, b) + subspace_distance(b, c) + 1e-13);
    EXPECT_GE(subspace_distance(a, b), 0.0);
    EXPECT_LE(subspace_distance(a, b), 1.0 + 1e-13);
  }
}

TEST(HermitianEvolution, TimeZeroIsIdentity) {
  Rng rng(9);
  const CMatrix h = gen::random_hermitian(5, rng);
  EXPECT_LT((hermitian_evolution(h, 0.0) - CMatrix::Identity(5, 5)).norm(), 1e-13);
}

TEST(HermitianEvolution, DiagonalPhase) {
  CMatrix h = CMatrix::Zero(2, 2);
  h(1, 1) = std::numbers::pi;
  CMatrix expected = CMatrix::Zero(2, 2);
  expected(0, 0) = 1.0;
  expected(1, 1) = -1.0;
  EXPECT_LT((hermitian_evolution(h, 1.0) - expected).norm(), 1e-14);
}

TEST(HermitianEvolution, PauliXQuarterTurnMatchesSeries) {
  CMatrix sx(2, 2);
  sx << 0, 1, 1, 0;
  const double t = std::numbers::pi / 2.0;
  const CMatrix u = hermitian_evolution(sx, t);
  EXPECT_LT((u - series_exp(sx, t)).norm(), 1e-13);
  EXPECT_LT((u - Complex(0.0, -1.0) * sx).norm(), 1e-14);
}

TEST(HermitianEvolution, RejectsNonHermitian) {
  CMatrix m(2, 2);
  m << 0, 1, 0, 0;
  EXPECT_THROW(hermitian_evolution(m, 1.0), ValidationError);
}

TEST(HermitianEvolutionProperty, UnitaryGroupLawAndSeriesAgreement) {
  Rng rng(13);
  std::uniform_real_distribution<double> time(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Index d = 2 + trial % 6;
    const CMatrix h = gen::random_hermitian(d, rng);
    const double t = time(rng), s = time(rng);
    const CMatrix ut = hermitian_evolution(h, t);
    const CMatrix us = hermitian_evolution(h, s);
    const double tol = 1e-10 * d;
    EXPECT_LT((ut.adjoint() * ut - CMatrix::Identity(d, d)).norm(), tol);
    EXPECT_LT((hermitian_evolution(h, t + s) - ut * us).norm(), tol);
    EXPECT_LT((ut - series_exp(h, t, 120)).norm(), 1e-8);
  }
}

TEST(Projector, RejectsNonProjectors) {
  CMatrix m(2, 2);
  m << 1, 1, 0, 0;
  EXPECT_THROW(Projector::from_matrix(m), ValidationError);
  EXPECT_THROW(Projector::from_matrix(2.0 * CMatrix::Identity(2, 2)), ValidationError);
  const Projector p = Projector::from_matrix(CMatrix::Identity(3, 3));
  EXPECT_EQ(p.rank(), 3);
}

TEST(MonotoneLimit, IncreasingChainNormsGrow) {
  CMatrix e = CMatrix::Identity(3, 3);
  const std::vector<Subspace> chain{Subspace(e.leftCols(1)), Subspace(e.leftCols(2)),
                                    Subspace(e)};
  const CVector phi = CVector::Constant(3, 1.0 / std::sqrt(3.0));
  const auto vs = monotone_projector_limit(chain, phi);
  ASSERT_EQ(vs.size(), 3u);
  EXPECT_LT(vs[0].norm(), vs[1].norm());
  EXPECT_LT(vs[1].norm(), vs[2].norm());
  EXPECT_NEAR(vs[2].norm(), 1.0, 1e-15);
}

TEST(MonotoneLimit, DecreasingChainEndsOnFirstAxis) {
  CMatrix e = CMatrix::Identity(3, 3);
  const std::vector<Subspace> chain{Subspace(e), Subspace(e.leftCols(2)),
                                    Subspace(e.leftCols(1))};
  const CVector phi = CVector::Constant(3, 1.0 / std::sqrt(3.0));
  const auto vs = monotone_projector_limit(chain, phi);
  CVector expected = CVector::Zero(3);
  expected(0) = 1.0 / std::sqrt(3.0);
  EXPECT_LT((vs.back() - expected).norm(), 1e-15);
}

TEST(MonotoneLimit, NonNestedChainThrows) {
  CMatrix e = CMatrix::Identity(3, 3);
  const std::vector<Subspace> chain{Subspace(e.col(0)), Subspace(e.col(1))};
  EXPECT_THROW(monotone_projector_limit(chain, CVector::Ones(3)), ValidationError);
}

TEST(MonotoneLimitProperty, RandomDepthFiveChainsInC16) {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    auto chain = gen::random_increasing_chain(16, 5, rng);
    const CVector phi = gen::random_vector(16, rng).normalized();
    // Union closure: join of every member, built independently of the chain's last element.
    Subspace uni = chain.front();
    for (const auto& s : chain) uni = join(uni, s);
    const auto inc = monotone_projector_limit(chain, phi);
    for (std::size_t i = 0; i + 1 < inc.size(); ++i) {
      EXPECT_LE(inc[i].norm(), inc[i + 1].norm() + 1e-12);
    }
    EXPECT_LT((inc.back() - uni.project(phi)).norm(), 1e-9);

    std::reverse(chain.begin(), chain.end());
    Subspace inter = chain.front();
    for (const auto& s : chain) inter = intersect(inter, s);
    const auto dec = monotone_projector_limit(chain, phi);
    for (std::size_t i = 0; i + 1 < dec.size(); ++i) {
      EXPECT_GE(dec[i].norm() + 1e-12, dec[i + 1].norm());
    }
    EXPECT_LT((dec.back() - inter.project(phi)).norm(), 1e-9);
    // Infimum norm: ||p_Λ φ|| is the minimum over the directed family.
    double min_norm = 2.0;
    for (const auto& v : dec) min_norm = std::min(min_norm, v.norm());
    EXPECT_NEAR(inter.project(phi).norm(), min_norm, 1e-9);
  }
}
