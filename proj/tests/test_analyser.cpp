#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "histlab/analyser.hpp"
#include "histlab/commutant.hpp"
#include "histlab/scenarios.hpp"
#include "support/generators.hpp"

using namespace histlab;
using histlab::gen::Rng;

namespace {

Projector diag(std::initializer_list<double> entries) {
  const Index d = static_cast<Index>(entries.size());
  CMatrix m = CMatrix::Zero(d, d);
  Index i = 0;
  for (double e : entries) m(i, i) = e, ++i;
  return Projector::from_matrix(m);
}

double max_cell_distance(const Analyser& a, const Analyser& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.num_times(); ++i) {
    for (std::size_t c = 0; c < a.partition(i).size(); ++c) {
      worst = std::max(worst, (a.cell(i, c).matrix() - b.cell(i, c).matrix()).norm());
    }
  }
  return worst;
}

}  // namespace

TEST(Time, CanonicalLabels) {
  EXPECT_EQ(Time(0.0).label(), "0");
  EXPECT_EQ(Time(-0.0).label(), "0");
  EXPECT_EQ(Time(1.0).label(), "1");
  EXPECT_EQ(Time(0.5).label(), "0.5");
  EXPECT_EQ(Time(0.1 + 0.2), Time(0.30000000000000004));
  EXPECT_FALSE(Time(0.1 + 0.2) == Time(0.3));
  EXPECT_LT(Time(1.0), Time(2.0));
}

TEST(ValidatePartition, SingleCellIdentity) {
  const Partition p = validate_partition({Projector::identity(3)});
  EXPECT_EQ(p.size(), 1u);
  EXPECT_EQ(p.labels().front(), "0");
}

TEST(ValidatePartition, DiagonalPair) {
  const Partition p = validate_partition({diag({1, 0}), diag({0, 1})}, {"up", "down"});
  EXPECT_EQ(p.find("down"), std::optional<std::size_t>(1));
}

TEST(ValidatePartition, OverlapRejected) {
  try {
    validate_partition({diag({1, 0}), diag({1, 0})});
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("overlap"), std::string::npos);
  }
}

TEST(ValidatePartition, MissingMassRejected) {
  EXPECT_THROW(validate_partition({diag({1, 0, 0}), diag({0, 1, 0})}), ValidationError);
  EXPECT_THROW(validate_partition({diag({1, 0}), diag({0, 1})}, {"a", "a"}), ValidationError);
}

TEST(HeisenbergAnalyser, ZeroHamiltonianIsStatic) {
  const Partition base = validate_partition({diag({1, 0, 0}), diag({0, 1, 1})});
  const std::vector<Time> ts{Time(0.0), Time(1.5), Time(7.0)};
  const Analyser an = heisenberg_analyser(base, CMatrix::Zero(3, 3), ts);
  for (std::size_t i = 0; i < an.num_times(); ++i) {
    for (std::size_t c = 0; c < base.size(); ++c) {
      EXPECT_LT((an.cell(i, c).matrix() - base.cell(c).matrix()).norm(), 1e-14);
    }
  }
}

TEST(HeisenbergAnalyser, Q2RotatedLines) {
  const ScenarioInstance q2 = scenario("Q2");
  // exp(-i θ σ_y) is the real rotation [[c, -s], [s, c]]; p^1_a projects onto U† e_a.
  const double c = std::cos(std::numbers::pi / 4.0), s = std::sin(std::numbers::pi / 4.0);
  CMatrix u(2, 2);
  u << c, -s, s, c;
  for (std::size_t a = 0; a < 2; ++a) {
    CVector e = CVector::Zero(2);
    e(static_cast<Index>(a)) = 1.0;
    const CVector line = u.adjoint() * e;
    EXPECT_LT((q2.analyser.cell(1, a).matrix() - line * line.adjoint()).norm(), 1e-14);
  }
  EXPECT_LT((q2.analyser.cell(0, 0).matrix() - diag({1, 0}).matrix()).norm(), 1e-14);
}

TEST(HeisenbergAnalyser, GroupConsistencyUnderTimeShift) {
  Rng rng(21);
  const Index d = 5;
  const CMatrix h = gen::random_hermitian(d, rng);
  const Partition base =
      gen::partition_in_basis(gen::random_unitary(d, rng), gen::random_groups(d, 3, rng));
  const double t = 0.7, shift = 0.45;
  const std::vector<Time> one{Time(t)}, both{Time(t + shift)};
  const Analyser at_t = heisenberg_analyser(base, h, one);
  const Analyser at_ts = heisenberg_analyser(base, h, both);
  const CMatrix us = hermitian_evolution(h, shift);
  for (std::size_t c = 0; c < base.size(); ++c) {
    const CMatrix shifted = us.adjoint() * at_t.cell(0, c).matrix() * us;
    EXPECT_LT((shifted - at_ts.cell(0, c).matrix()).norm(), 1e-12);
    EXPECT_EQ(at_t.cell(0, c).rank(), base.cell(c).rank());
  }
}

TEST(HeisenbergAnalyser, ProductIdentityUnderEvolution) {
  // p^{t1}_{a1} p^{t2}_{a2} U_t φ = U_t p^{t1+t}_{a1} p^{t2+t}_{a2} φ
  Rng rng(22);
  const Index d = 4;
  const CMatrix h = gen::random_hermitian(d, rng);
  const Partition base = gen::partition_in_basis(CMatrix::Identity(d, d), {{0, 1}, {2, 3}});
  const double t = 0.3;
  const std::vector<Time> ts{Time(0.5), Time(1.0)}, shifted{Time(0.8), Time(1.3)};
  const Analyser a = heisenberg_analyser(base, h, ts);
  const Analyser b = heisenberg_analyser(base, h, shifted);
  const CMatrix ut = hermitian_evolution(h, t);
  const CVector phi = gen::random_vector(d, rng);
  const CVector lhs = a.cell(0, 0).matrix() * a.cell(1, 1).matrix() * ut * phi;
  const CVector rhs = ut * b.cell(0, 0).matrix() * b.cell(1, 1).matrix() * phi;
  EXPECT_LT((lhs - rhs).norm(), 1e-12);
}

TEST(Refine, IdentityRefinement) {
  const ScenarioInstance d4 = scenario("D4");
  const RefinementMap rm = refine(d4.analyser, {}, {});
  EXPECT_LT(max_cell_distance(rm.parent, rm.child), 1e-15);
  EXPECT_EQ(rm.cell_map[0][0], std::vector<std::size_t>{0});
}

TEST(Refine, BinarySplit) {
  const Partition p = validate_partition({diag({1, 1, 0, 0}), diag({0, 0, 1, 1})}, {"a", "b"});
  const Analyser an({Time(0.0)}, {p});
  const std::vector<CellSplit> splits{
      {Time(0.0), "a", {{"a0", diag({1, 0, 0, 0})}, {"a1", diag({0, 1, 0, 0})}}}};
  const RefinementMap rm = refine(an, splits, {});
  EXPECT_EQ(rm.child.partition(0).size(), 3u);
  EXPECT_EQ(rm.cell_map[0][0].size(), 2u);
}

TEST(Refine, SumMismatchRejected) {
  const Partition p = validate_partition({diag({1, 1, 0, 0}), diag({0, 0, 1, 1})}, {"a", "b"});
  const Analyser an({Time(0.0)}, {p});
  const std::vector<CellSplit> splits{
      {Time(0.0), "a", {{"a0", diag({1, 0, 0, 0})}, {"a1", diag({0, 0, 1, 0})}}}};
  EXPECT_THROW(refine(an, splits, {}), ValidationError);
}

TEST(Refine, D4RankOneRefinementByBruteForce) {
  const ScenarioInstance d4 = scenario("D4");
  // Refine the time-s cells by the time-t labels.
  const std::vector<CellSplit> splits{
      {Time(0.0), "1", {{"11", diag({1, 0, 0, 0})}, {"12", diag({0, 1, 0, 0})}}},
      {Time(0.0), "2", {{"21", diag({0, 0, 1, 0})}, {"22", diag({0, 0, 0, 1})}}}};
  const RefinementMap rm = refine(d4.analyser, splits, {});
  // Brute force over every (parent label, child label) pair.
  for (std::size_t a = 0; a < 2; ++a) {
    CMatrix sum = CMatrix::Zero(4, 4);
    for (std::size_t b : rm.cell_map[0][a]) sum += rm.child.cell(0, b).matrix();
    EXPECT_LT((sum - rm.parent.cell(0, a).matrix()).norm(), 1e-15);
  }
  for (std::size_t b = 0; b < 4; ++b) EXPECT_EQ(rm.child.cell(0, b).rank(), 1);
}

TEST(Coarsen, MergeEverythingGivesTrivialAnalyser) {
  const ScenarioInstance d4 = scenario("D4");
  const std::vector<LabelMerge> merges{{Time(0.0), {{"all", {"1", "2"}}}},
                                       {Time(1.0), {{"all", {"1", "2"}}}}};
  const std::vector<Time> keep{Time(0.0), Time(1.0)};
  const RefinementMap rm = coarsen(d4.analyser, merges, keep);
  for (std::size_t i = 0; i < 2; ++i) {
    ASSERT_EQ(rm.parent.partition(i).size(), 1u);
    EXPECT_LT((rm.parent.cell(i, 0).matrix() - CMatrix::Identity(4, 4)).norm(), 1e-15);
  }
}

TEST(Coarsen, KeepSingleTime) {
  const ScenarioInstance d4 = scenario("D4");
  const std::vector<Time> keep{Time(0.0)};
  const RefinementMap rm = coarsen(d4.analyser, {}, keep);
  EXPECT_EQ(rm.parent.num_times(), 1u);
  EXPECT_EQ(rm.child.num_times(), 2u);
}

TEST(Coarsen, MergeTwoOfThree) {
  const Partition p = validate_partition({diag({1, 0, 0}), diag({0, 1, 0}), diag({0, 0, 1})},
                                         {"x", "y", "z"});
  const Analyser an({Time(0.0)}, {p});
  const std::vector<LabelMerge> merges{{Time(0.0), {{"xy", {"x", "y"}}, {"z", {"z"}}}}};
  const std::vector<Time> keep{Time(0.0)};
  const RefinementMap rm = coarsen(an, merges, keep);
  ASSERT_EQ(rm.parent.partition(0).size(), 2u);
  EXPECT_LT((rm.parent.cell(0, 0).matrix() - diag({1, 1, 0}).matrix()).norm(), 1e-15);
  EXPECT_LT((rm.parent.cell(0, 1).matrix() - diag({0, 0, 1}).matrix()).norm(), 1e-15);
}

TEST(Coarsen, InvalidGroupingRejected) {
  const ScenarioInstance d4 = scenario("D4");
  const std::vector<Time> keep{Time(0.0)};
  const std::vector<LabelMerge> missing{{Time(0.0), {{"only", {"1"}}}}};
  EXPECT_THROW(coarsen(d4.analyser, missing, keep), ValidationError);
  const std::vector<LabelMerge> twice{{Time(0.0), {{"a", {"1"}}, {"b", {"1", "2"}}}}};
  EXPECT_THROW(coarsen(d4.analyser, twice, keep), ValidationError);
  const std::vector<Time> bad_keep{Time(5.0)};
  EXPECT_THROW(coarsen(d4.analyser, {}, bad_keep), ValidationError);
}

TEST(CoarsenProperty, NoMergesAllTimesIsIdentity) {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const Analyser an = gen::random_generic_analyser(5, 3, 3, rng);
    const RefinementMap rm = coarsen(an, {}, an.times());
    EXPECT_LT(max_cell_distance(rm.parent, an), 1e-15);
  }
}

TEST(RefinementProperty, CompositionReachesGrandparent) {
  Rng rng(24);
  for (int trial = 0; trial < 10; ++trial) {
    const Index d = 6;
    const CMatrix u = gen::random_unitary(d, rng);
    // Three levels of the same basis: 2 cells -> 3 cells -> 6 rank-one cells.
    const Partition coarse = gen::partition_in_basis(u, {{0, 1, 2}, {3, 4, 5}});
    const Analyser parent({Time(0.0)}, {coarse});
    auto line = [&](Index i) {
      return Projector::from_matrix(u.col(i) * u.col(i).adjoint());
    };
    auto plane = [&](Index i, Index j) {
      CMatrix c(d, 2);
      c << u.col(i), u.col(j);
      return Projector::from_matrix(c * c.adjoint());
    };
    const std::vector<CellSplit> first{{Time(0.0), "0", {{"0a", plane(0, 1)}, {"0b", line(2)}}}};
    const RefinementMap r1 = refine(parent, first, {});
    const std::vector<CellSplit> second{{Time(0.0), "0a", {{"0a0", line(0)}, {"0a1", line(1)}}},
                                        {Time(0.0), "1", {{"10", line(3)}, {"11", plane(4, 5)}}}};
    const Partition extra = gen::partition_in_basis(u, {{0, 3}, {1, 2, 4, 5}});
    const std::vector<ExtraTime> extras{{Time(1.0), extra}};
    const RefinementMap r2 = refine(r1.child, second, extras);
    const RefinementMap r12 = compose(r1, r2);
    EXPECT_EQ(r12.child.num_times(), 2u);
    EXPECT_EQ(r12.cell_map[0][0].size(), 3u);
    EXPECT_EQ(r12.cell_map[0][1].size(), 2u);
  }
}

TEST(Scenario, TriadicMarginals) {
  const ScenarioInstance tri = scenario("TRI9");
  const CVector& phi = tri.state;
  EXPECT_NEAR((tri.analyser.cell(0, 0).matrix() * phi).squaredNorm(), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR((tri.analyser.cell(1, 0).matrix() * phi).squaredNorm(), 1.0 / 9.0, 1e-15);
}

TEST(Scenario, StaticPartitionsIdentical) {
  const ScenarioInstance st = scenario("STATIC", {{"K", 4}, {"p", 0.3}});
  ASSERT_EQ(st.analyser.num_times(), 4u);
  for (std::size_t i = 1; i < 4; ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      EXPECT_EQ((st.analyser.cell(i, c).matrix() - st.analyser.cell(0, c).matrix()).norm(), 0.0);
    }
  }
  EXPECT_NEAR(std::norm(st.state(0)), 0.3, 1e-15);
}

TEST(Scenario, Q2CrossTimeMeetsVanish) {
  const ScenarioInstance q2 = scenario("Q2");
  for (std::size_t a = 0; a < 2; ++a) {
    for (std::size_t b = 0; b < 2; ++b) {
      EXPECT_EQ(meet(q2.analyser.cell(0, a), q2.analyser.cell(1, b)).rank(), 0);
    }
  }
}

TEST(Scenario, PgridIsValidAndNormalized) {
  const ScenarioInstance pg = scenario("PGRID", {{"n", 10}, {"times", 4}});
  EXPECT_EQ(pg.analyser.dim(), 10);
  EXPECT_EQ(pg.analyser.num_times(), 4u);
  EXPECT_NEAR(pg.state.norm(), 1.0, 1e-14);
  EXPECT_LT((pg.hamiltonian - pg.hamiltonian.adjoint()).norm(), 1e-15);
  // Periodic Laplacian annihilates the constant vector.
  EXPECT_LT((pg.hamiltonian * CVector::Ones(10)).norm(), 1e-14);
}

TEST(Scenario, UnknownNameAndBadParams) {
  EXPECT_THROW(scenario("NOPE"), ValidationError);
  EXPECT_THROW(scenario("STATIC", {{"K", 0}}), ValidationError);
  EXPECT_THROW(scenario("STATIC", {{"p", 1.5}}), ValidationError);
  EXPECT_THROW(scenario("D4", {{"x", 1}}), ValidationError);
}

TEST(Scenario, ListingIsStableAndComplete) {
  const auto a = list_scenarios();
  const auto b = list_scenarios();
  ASSERT_GE(a.size(), 5u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].name, b[i].name);
  for (const char* n : {"Q2", "D4", "TRI9", "STATIC", "PGRID"}) {
    EXPECT_TRUE(std::any_of(a.begin(), a.end(), [&](const ScenarioInfo& s) { return s.name == n; }));
  }
}
