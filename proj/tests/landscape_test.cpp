#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "spm/experiments.hpp"
#include "spm/landscape.hpp"
#include "test_util.hpp"

using namespace spm;
using spm::testing::random_ensemble;

namespace {

Vector unit(int dim, int i) {
  Vector e = Vector::Zero(dim);
  e(i) = 1.0;
  return e;
}

TensorSubspace noiseless_subspace(const ComponentEnsemble& e) {
  return extract_subspace(cp_synthesize(e), (e.order + 1) / 2, RankRule::fixed(e.rank()));
}

}  // namespace

TEST(Grammian, Examples) {
  const Grammian g = grammian(Matrix::Identity(4, 3), 2);
  EXPECT_EQ(g.g, Matrix::Identity(3, 3));
  EXPECT_EQ(g.min_eigenvalue, 1.0);

  const double c = 0.6;
  Matrix a(2, 2);
  a << 1, c, 0, std::sqrt(1 - c * c);
  const Grammian g2 = grammian(a, 2);
  EXPECT_NEAR(g2.g(0, 1), c * c, 1e-15);
  EXPECT_NEAR(g2.min_eigenvalue, 1 - c * c, 1e-15);
  EXPECT_NEAR(g2.max_eigenvalue, 1 + c * c, 1e-15);
}

TEST(Grammian, SingleColumnIsOne) {
  CounterRng rng(1);
  const Grammian g = grammian(random_unit_columns(7, 1, rng), 3);
  EXPECT_NEAR(g.min_eigenvalue, 1.0, 4 * std::numeric_limits<double>::epsilon());
}

TEST(Grammian, UnitDiagonalAndSymmetric) {
  CounterRng rng(2);
  const Grammian g = grammian(random_unit_columns(6, 12, rng), 2);
  EXPECT_LE((g.g.diagonal() - Vector::Ones(12)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((g.g - g.g.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ObjectiveViaGrammian, AgreesWithProjector) {
  CounterRng rng(3);
  const ComponentEnsemble e = random_ensemble(8, 12, 4, rng);
  const TensorSubspace s = noiseless_subspace(e);
  const Grammian g = grammian(e.components, 2);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector x = random_unit_vector(8, rng);
    EXPECT_NEAR(objective_via_grammian(e.components, g, x), objective(s, x), 1e-9);
  }
}

TEST(ObjectiveViaGrammian, SpecialCases) {
  const Matrix id = Matrix::Identity(3, 3);
  EXPECT_NEAR(objective_via_grammian(id, grammian(id, 2), unit(3, 1)), 1.0, 1e-15);

  CounterRng rng(4);
  const Matrix a = random_unit_columns(4, 1, rng);
  const Vector x = random_unit_vector(4, rng);
  EXPECT_NEAR(objective_via_grammian(a, grammian(a, 3), x), std::pow(a.col(0).dot(x), 6), 1e-15);

  Matrix dup(3, 2);
  dup << a.col(0).head(3).normalized(), a.col(0).head(3).normalized();
  EXPECT_THROW(objective_via_grammian(dup, grammian(dup, 2), unit(3, 0)), RankDeficiencyError);
}

TEST(CoefficientIdentity, ExpansionReproducesProjection) {
  CounterRng rng(5);
  const ComponentEnsemble e = random_ensemble(6, 9, 6, rng);
  const TensorSubspace s = noiseless_subspace(e);
  const Grammian g = grammian(e.components, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = random_unit_vector(6, rng);
    const Vector sigma = grammian_coefficients(e.components, g, x);
    const Vector lhs = khatri_rao_power(e.components, 3) * sigma;
    const Vector rhs = s.basis() * project_coeffs(s, kron_power(x, 3));
    EXPECT_LE((lhs - rhs).norm(), 1e-9);
  }
}

TEST(PmObjective, Examples) {
  CounterRng rng(6);
  const Vector a = random_unit_vector(4, rng);
  EXPECT_NEAR(pm_objective(sym_outer_power(a, 4), a), 1.0, 1e-14);
  const SymTensor t = spm::testing::random_sym_tensor(4, 4, rng);
  const SymTensor u = spm::testing::random_sym_tensor(4, 4, rng);
  const Vector x = random_unit_vector(4, rng);
  EXPECT_NEAR(pm_objective(t + 2.0 * u, x), pm_objective(t, x) + 2 * pm_objective(u, x), 1e-12);
}

TEST(EquiangularIdentity, OrthonormalCase) {
  CounterRng rng(7);
  const Matrix a = Matrix::Identity(5, 5);
  const TensorSubspace s = component_subspace(a, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = random_unit_vector(5, rng);
    const Vector zeta = a.transpose() * x;
    const double mass = zeta.array().square().sum();
    const double expected = zeta.array().pow(4).sum();
    EXPECT_NEAR(equiangular_objective(a, 2, 0.0, mass, x), expected, 1e-14);
    EXPECT_NEAR(objective(s, x), expected, 1e-12);
  }
}

TEST(EstimateRho, OrthonormalIsZero) {
  CounterRng rng(8);
  for (int s : {2, 3, 4}) {
    const FrameConstant fc = estimate_rho(Matrix::Identity(4, 4), s, 20, rng);
    EXPECT_NEAR(fc.lower, 0.0, 1e-12) << s;
    EXPECT_NEAR(fc.upper, 0.0, 1e-12) << s;
  }
  const FrameConstant exact = estimate_rho(Matrix::Identity(2, 2), 2, 0, rng);
  EXPECT_TRUE(exact.exact);
  EXPECT_NEAR(exact.lower, 0.0, 1e-12);
}

TEST(EstimateRho, IntervalAndMonotone) {
  CounterRng rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix a = random_unit_columns(6, 10, rng);
    double prev = std::numeric_limits<double>::infinity();
    for (int s = 2; s <= 6; ++s) {
      const FrameConstant fc = estimate_rho(a, s, 30, rng);
      EXPECT_GE(fc.lower, 0.0);
      EXPECT_LE(fc.lower, fc.upper + 1e-9);
      EXPECT_LE(fc.upper, fc.gershgorin + 1e-12);
      // rho_s is nonincreasing in s
      EXPECT_LE(fc.lower, prev + 1e-9);
      prev = fc.upper;
    }
  }
}

TEST(EstimateRho, ExactSandwichInTwoDimensions) {
  CounterRng rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix a = random_unit_columns(2, 3, rng);
    for (int s = 2; s <= 5; ++s) {
      const FrameConstant fc = estimate_rho(a, s, 0, rng);
      ASSERT_TRUE(fc.exact);
      const Grammian g = grammian(a, s);
      const Grammian half = grammian(a, s / 2);
      EXPECT_LE(1 - fc.lower, g.min_eigenvalue + 1e-9);
      EXPECT_LE(g.min_eigenvalue, g.max_eigenvalue);
      EXPECT_LE(g.max_eigenvalue, 1 + fc.lower + 1e-9);
      EXPECT_LE(1 + fc.lower, half.max_eigenvalue + 1e-9);
    }
  }
}

TEST(Thresholds, Examples) {
  const ThresholdSet t = thresholds(0.0, 0.0, 2, 20, 100);
  EXPECT_NEAR(t.tau, 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(t.delta0, 1.0 / 44.0, 1e-15);
  EXPECT_EQ(t.det_level(0.0), 0.0);
  EXPECT_NEAR(t.eps_k, 100 * std::pow(std::log(100.0), 2) / 400, 1e-12);
  EXPECT_NEAR(t.eps_k, 5.3019, 1e-4);
  EXPECT_TRUE(t.deterministic_enabled());
  EXPECT_GT(t.delta0, 0.0);
  EXPECT_LT(t.delta0, 0.5);
  EXPECT_FALSE(thresholds(0.1, 0.1, 2, 20, 100).deterministic_enabled());
  EXPECT_EQ(to_string(Verdict::RejectedSpurious), "rejected-spurious");
}

TEST(CertifyPoint, ComponentPasses) {
  CounterRng rng(11);
  const ComponentEnsemble e(4, Vector::Ones(3), Matrix::Identity(5, 3));
  const TensorSubspace s = noiseless_subspace(e);
  const ThresholdSet thr = thresholds(0.0, 0.0, 2, 5, 3);
  const CriticalityReport r = certify_point(s, e, unit(5, 1), thr);
  EXPECT_NEAR(r.objective, 1.0, 1e-14);
  EXPECT_LE(r.gradient_norm, 1e-12);
  EXPECT_EQ(r.nearest_index, 1);
  EXPECT_LE(r.nearest_distance, 1e-14);
  EXPECT_EQ(r.deterministic, Verdict::Pass);
  EXPECT_LE(r.zeta.cwiseAbs().maxCoeff(), 1.0);
}

TEST(CertifyPoint, SpuriousPointRejected) {
  const Vector a = unit(3, 0), b = unit(3, 1);
  const double delta = 0.3;
  const TensorSubspace s = spurious_construction(a, b, delta, 2);
  const ComponentEnsemble truth(4, Vector::Ones(1), a);
  const ThresholdSet thr = thresholds(0.0, 0.0, 2, 3, 1);
  const CriticalityReport r = certify_point(s, truth, b, thr);
  EXPECT_NEAR(r.objective, 0.09, 1e-12);
  EXPECT_LE(r.gradient_norm, 1e-12);
  EXPECT_LT(r.max_hessian_eigenvalue, 0.0);
  EXPECT_EQ(r.deterministic, Verdict::RejectedSpurious);
}

TEST(CertifyPoint, NotCriticalAndOvercomplete) {
  CounterRng rng(12);
  const ComponentEnsemble e = random_ensemble(5, 4, 4, rng);
  const TensorSubspace s = noiseless_subspace(e);
  const ThresholdSet thr = thresholds(0.5, 0.5, 2, 5, 4);
  CertifyOptions opts;
  opts.overcomplete_constant = 0.01;
  const CriticalityReport r = certify_point(s, e, random_unit_vector(5, rng), thr, opts);
  EXPECT_EQ(r.deterministic, Verdict::Disabled);
  EXPECT_EQ(r.overcomplete, Verdict::NotCritical);
  const CriticalityReport c = certify_point(s, e, e.components.col(2), thr, opts);
  EXPECT_EQ(c.overcomplete, Verdict::Pass);
}

TEST(SpuriousConstruction, PointQuantities) {
  CounterRng rng(13);
  for (int n : {2, 3}) {
    for (double delta : {0.1, 0.3, 0.5}) {
      const Matrix q = Matrix(random_unit_columns(4, 2, rng)).householderQr().householderQ() * Matrix::Identity(4, 2);
      const Vector a = q.col(0), b = q.col(1);
      const TensorSubspace s = spurious_construction(a, b, delta, n);
      EXPECT_NEAR(subspace_distance(s, TensorSubspace(4, n, kron_power(a, n))), delta, 1e-10);
      EXPECT_NEAR(objective(s, b), delta * delta, 1e-12);
      EXPECT_NEAR(objective(s, a), 1 - delta * delta, 1e-12);
      EXPECT_LE(riemannian_gradient(s, b).norm(), 1e-12);
      EXPECT_LE(max_tangent_hessian_eigenvalue(s, b), -2.0 * n * delta * delta + 1e-10);
    }
  }
  EXPECT_THROW(spurious_construction(unit(3, 0), Vector::Ones(3).normalized(), 0.3, 2), std::invalid_argument);
  EXPECT_THROW(spurious_construction(unit(3, 0), unit(3, 1), 1.0, 2), std::invalid_argument);
}

TEST(Rip, Examples) {
  CounterRng rng(14);
  const RipResult orth = rip_check(Matrix::Identity(5, 4), 3, 1e-6, rng);
  EXPECT_TRUE(orth.pass);
  EXPECT_TRUE(orth.exhaustive);
  EXPECT_EQ(orth.subsets_checked, 4);
  EXPECT_NEAR(orth.max_deviation, 0.0, 1e-15);

  EXPECT_LE(rip_check(random_unit_columns(5, 8, rng), 1, 1e-9, rng).max_deviation, 1e-14);

  Matrix near(3, 4);
  const Vector base = unit(3, 0);
  for (int j = 0; j < 4; ++j) near.col(j) = (base + 0.05 * (j + 1) * unit(3, 1 + j % 2)).normalized();
  const RipResult r = rip_check(near, 2, 0.1, rng);
  EXPECT_FALSE(r.pass);
  const Matrix g = near.transpose() * near;
  const int i = r.worst_subset[0], j = r.worst_subset[1];
  EXPECT_NEAR(r.max_deviation, std::abs(g(i, j)), 1e-12);

  const RipResult sampled = rip_check(random_unit_columns(40, 200, rng), 5, 0.9, rng);
  EXPECT_FALSE(sampled.exhaustive);
  EXPECT_EQ(sampled.subsets_checked, 10000);
}

TEST(RipPartition, Examples) {
  const RipPartition p = rip_partition(Matrix::Identity(3, 3), unit(3, 0), 1, 0.1);
  EXPECT_EQ(p.indices, std::vector<int>{0});
  EXPECT_NEAR(p.in_set_mass, 1.0, 1e-15);
  EXPECT_TRUE(p.mass_ok && p.off_set_ok);

  const Vector x = (unit(3, 0) + unit(3, 2)).normalized();
  EXPECT_NEAR(rip_partition(Matrix::Identity(3, 3), x, 2, 0.1).in_set_mass, 1.0, 1e-15);
}

TEST(RipPartition, RandomEnsembleOffSetBound) {
  CounterRng rng(15);
  const Matrix a = random_unit_columns(40, 200, rng);
  const int p = 10;
  const double delta = 0.5;
  for (int trial = 0; trial < 100; ++trial) {
    const Vector x = random_unit_vector(40, rng);
    const RipPartition part = rip_partition(a, x, p, delta);
    // Oracle: sort all squared correlations directly.
    std::vector<double> sq;
    for (int i = 0; i < 200; ++i) sq.push_back(std::pow(a.col(i).dot(x), 2));
    std::sort(sq.rbegin(), sq.rend());
    EXPECT_NEAR(part.max_off_set, sq[p], 1e-15);
    EXPECT_TRUE(part.off_set_ok);
  }
}

TEST(MutualCoherence, Basic) {
  Matrix a(2, 2);
  a << 1, 0.6, 0, 0.8;
  EXPECT_NEAR(mutual_coherence(a), 0.6, 1e-15);
  EXPECT_EQ(mutual_coherence(Matrix::Identity(3, 3)), 0.0);
}
