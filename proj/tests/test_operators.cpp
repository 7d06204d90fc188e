#include <cmath>
#include <complex>
#include <numbers>

#include <gtest/gtest.h>

#include <Eigen/SVD>

#include "ergolab/operators.hpp"

using namespace ergolab;

namespace {

VectorField character(const SampleSpace& s, long freq) {
  VectorField f = VectorField::zero(s, 1);
  for (std::size_t i = 0; i < s.size(); ++i) f.values(static_cast<Eigen::Index>(i), 0) = cis_turns(static_cast<double>(freq) * s.turn(i));
  return f;
}

/// Field with frequencies |m| < M/4 only.
VectorField band_limited(std::size_t M, std::size_t d, std::uint64_t seed) {
  const RandomStream g(RandomStream::Law::complex_gaussian, seed);
  TrigField t;
  t.d = d;
  for (long m = -static_cast<long>(M / 4) + 1; m < static_cast<long>(M / 4); ++m) {
    Vector c(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) c(static_cast<Eigen::Index>(j)) = g(static_cast<std::uint64_t>(m + 1000), j);
    t.coeffs[m] = c;
  }
  return t.sample(SampleSpace::circle_grid(M));
}

double rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

}  // namespace

TEST(SampleSpace, WeightsAndTurns) {
  const SampleSpace g = SampleSpace::circle_grid(8);
  EXPECT_DOUBLE_EQ(g.weight() * 8, 1.0);
  EXPECT_DOUBLE_EQ(g.turn(3), 3.0 / 8.0);
  const SampleSpace p = SampleSpace::circle_points(16, 5);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_GE(p.turn(i), 0.0);
    EXPECT_LT(p.turn(i), 1.0);
  }
  EXPECT_THROW(SampleSpace::circle_grid(1), DomainError);
  EXPECT_THROW(SampleSpace::finite(0), DomainError);
}

TEST(Apply, PermutationSendsIndicatorToPreimage) {
  const LinearOperator T = LinearOperator::koopman(Transformation::permutation({1, 2, 0}));
  VectorField f = VectorField::zero(T.space(), 1);
  f.values(0, 0) = 1.0;
  const VectorField g = T.apply(f);
  EXPECT_EQ(g.values(0, 0), cplx(0.0));
  EXPECT_EQ(g.values(1, 0), cplx(0.0));
  EXPECT_EQ(g.values(2, 0), cplx(1.0));
}

TEST(Apply, IdentityMatrixLeavesFieldUnchanged) {
  const SampleSpace s = SampleSpace::finite(5);
  const VectorField f = random_field(s, 3, 9);
  const LinearOperator T = LinearOperator::matrix(Matrix::Identity(3, 3), s);
  EXPECT_EQ(T.apply(f).values, f.values);
}

TEST(Apply, RotationMultipliesCharacterByEigenvalue) {
  const LinearOperator T = LinearOperator::koopman(Transformation::rotation_grid(2, 4));
  const VectorField f = character(T.space(), 1);
  const VectorField g = T.apply(f);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(std::abs(g.values(i, 0) - (-1.0) * f.values(i, 0)), 0.0, 1e-15);
}

TEST(ApplyPower, ZeroPowerAndStationaryMarkov) {
  const Matrix P = random_doubly_stochastic(6, 3);
  const LinearOperator T = LinearOperator::markov(P);
  VectorField f = VectorField::zero(T.space(), 2);
  f.values.setConstant(cplx(0.5, -1.0));
  EXPECT_EQ(T.apply_power(0, f).values, f.values);
  for (std::uint64_t n : {1, 7, 100}) {
    const VectorField g = T.apply_power(n, f);
    EXPECT_LT((g.values - f.values).norm(), 1e-12);
  }
  EXPECT_TRUE(T.is_dunford_schwartz());
}

TEST(ApplyPower, DoublingSendsCharacterToEightfold) {
  const LinearOperator T = LinearOperator::koopman(Transformation::doubling(64));
  const VectorField g = T.apply_power(3, character(T.space(), 1));
  const VectorField want = character(T.space(), 8);
  EXPECT_LT((g.values - want.values).norm(), 1e-12);
  EXPECT_FALSE(T.is_dunford_schwartz());
}

TEST(ApplyPower, MatchesRepeatedApplication) {
  const SampleSpace s = SampleSpace::finite(4);
  const LinearOperator T = LinearOperator::matrix(random_contraction(3, 21), s);
  const VectorField f = random_field(s, 3, 4);
  VectorField g = f;
  for (std::uint64_t n = 1; n <= 16; ++n) {
    g = T.apply(g);
    EXPECT_LT(rel(T.apply_power(n, f).values, g.values), 1e-12) << n;
  }
}

TEST(ApplyPower, RejectsMismatchedSpaces) {
  const LinearOperator T = LinearOperator::koopman(Transformation::permutation({1, 0}));
  EXPECT_THROW((void)T.apply(random_field(SampleSpace::finite(3), 1, 1)), DomainError);
  const LinearOperator A = LinearOperator::matrix(Matrix::Identity(2, 2));
  EXPECT_THROW((void)A.apply(random_field(SampleSpace::finite(1), 3, 1)), DomainError);
}

TEST(OperatorNorm, SimpleCases) {
  EXPECT_NEAR(operator_norm(Matrix::Identity(4, 4)), 1.0, 1e-12);
  Matrix D = Matrix::Zero(2, 2);
  D(0, 0) = 0.3;
  D(1, 1) = -0.7;
  EXPECT_NEAR(operator_norm(D), 0.7, 1e-12);
  EXPECT_EQ(operator_norm(Matrix::Zero(3, 3)), 0.0);
}

TEST(OperatorNorm, MatchesSvdOracle) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const RandomStream g(RandomStream::Law::complex_gaussian, seed);
    Matrix A(5, 5);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) A(i, j) = g(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j));
    }
    const double oracle = Eigen::JacobiSVD<Matrix>(A).singularValues()(0);
    EXPECT_NEAR(operator_norm(A), oracle, 1e-8 * oracle) << seed;
  }
}

TEST(OperatorNorm, TinyAndHugeScales) {
  const Matrix A = random_contraction(4, 2);
  const double oracle = Eigen::JacobiSVD<Matrix>(A).singularValues()(0);
  for (double s : {1e-200, 1e-120, 1e150}) {
    EXPECT_NEAR(operator_norm(s * A), s * oracle, 1e-10 * s * oracle) << s;
  }
}

TEST(OperatorNorm, RandomContractionHasUnitNorm) {
  const Matrix A = random_contraction(6, 7);
  EXPECT_NEAR(Eigen::JacobiSVD<Matrix>(A).singularValues()(0), 1.0, 1e-12);
  EXPECT_TRUE(LinearOperator::matrix(A).is_contraction());
  EXPECT_FALSE(LinearOperator::matrix(2.0 * A).is_contraction());
}

TEST(PowerBound, AuditedHorizon) {
  Matrix J = Matrix::Zero(2, 2);
  J(0, 0) = 1.0;
  J(0, 1) = 1.0;
  J(1, 1) = 1.0;  // Jordan block: ||J^n|| grows linearly
  const LinearOperator T = LinearOperator::matrix(J, SampleSpace::finite(1), 64);
  EXPECT_GT(T.power_bound(), 60.0);
  EXPECT_FALSE(T.is_power_bounded(10.0));
  EXPECT_FALSE(T.power_bounded());
  Matrix N = Matrix::Zero(2, 2);
  N(0, 0) = 0.9;
  N(0, 1) = 3.0;
  N(1, 1) = 0.5;  // transient growth, then decay
  const LinearOperator B = LinearOperator::matrix(N, SampleSpace::finite(1), 256);
  EXPECT_FALSE(B.is_contraction());
  EXPECT_TRUE(B.power_bounded());
  const LinearOperator U = LinearOperator::matrix(random_contraction(3, 2));
  EXPECT_TRUE(U.is_power_bounded(1.0 + 1e-12));
}

TEST(MeasurePreservation, FiniteAndGridMaps) {
  EXPECT_TRUE(Transformation::permutation({2, 0, 1, 3}).preserves_measure());
  EXPECT_TRUE(Transformation::rotation_grid(3, 16).preserves_measure());
  EXPECT_TRUE(Transformation::doubling(32).preserves_measure());
  EXPECT_THROW(Transformation::permutation({0, 0, 1}), DomainError);
  EXPECT_THROW(Transformation::doubling(12), DomainError);
  EXPECT_THROW(Transformation::rotation_points(0.3, SampleSpace::circle_grid(8)), DomainError);
}

TEST(Koopman, IsometryOnExactGrids) {
  const LinearOperator perm = LinearOperator::koopman(Transformation::permutation({3, 0, 4, 1, 2}));
  const LinearOperator rot = LinearOperator::koopman(Transformation::rotation_grid(5, 32));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const VectorField f = random_field(perm.space(), 3, seed);
    EXPECT_NEAR(perm.apply(f).norm(), f.norm(), 4 * std::numeric_limits<double>::epsilon() * f.norm());
    const VectorField g = random_field(rot.space(), 2, seed);
    EXPECT_NEAR(rot.apply_power(7, g).norm(), g.norm(), 4 * std::numeric_limits<double>::epsilon() * g.norm());
  }
}

TEST(Contraction, AuditOnSeededFields) {
  const SampleSpace fin = SampleSpace::finite(8);
  std::vector<LinearOperator> ops{
      LinearOperator::koopman(Transformation::permutation({1, 2, 3, 4, 5, 6, 7, 0})),
      LinearOperator::koopman(Transformation::rotation_grid(3, 64)),
      LinearOperator::matrix(random_contraction(3, 5), fin),
      LinearOperator::markov(random_doubly_stochastic(8, 4)),
      LinearOperator::skew(Cocycle(Transformation::permutation({1, 0, 3, 2, 5, 4, 7, 6}),
                                   {random_contraction(3, 1), random_contraction(3, 2), random_contraction(3, 3),
                                    random_contraction(3, 4), random_contraction(3, 5), random_contraction(3, 6),
                                    random_contraction(3, 7), random_contraction(3, 8)})),
  };
  for (const auto& T : ops) {
    ASSERT_TRUE(T.is_contraction());
    const std::size_t d = T.kind() == LinearOperator::Kind::matrix || T.kind() == LinearOperator::Kind::skew ? 3 : 2;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const VectorField f = random_field(T.space(), d, 100 + seed);
      EXPECT_LE(T.apply(f).norm(), f.norm() * (1.0 + 1e-10));
    }
  }
  // The doubling Koopman operator is exact on band-limited fields.
  const LinearOperator D = LinearOperator::koopman(Transformation::doubling(64));
  ASSERT_TRUE(D.is_contraction());
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const VectorField f = band_limited(64, 2, seed);
    EXPECT_LE(D.apply(f).norm(), f.norm() * (1.0 + 1e-10));
  }
}

TEST(Markov, ChecksStochasticity) {
  Matrix P = Matrix::Zero(2, 2);
  P(0, 0) = 0.5;
  P(0, 1) = 0.5;
  P(1, 0) = 1.0;
  const LinearOperator T = LinearOperator::markov(P);
  EXPECT_FALSE(T.is_dunford_schwartz());
  P(1, 0) = 0.7;
  EXPECT_THROW(LinearOperator::markov(P), DomainError);
}

TEST(Cocycle, ProductOrderAndIdentity) {
  const Matrix A0 = random_contraction(3, 11), A1 = random_contraction(3, 12);
  const Cocycle C(Transformation::permutation({1, 0}), {A0, A1});
  EXPECT_EQ(cocycle_product(C, 0, 0), Matrix::Identity(3, 3));
  EXPECT_LT(rel(cocycle_product(C, 0, 3), A0 * A1 * A0), 1e-15);
  EXPECT_LT(rel(cocycle_product(C, 1, 2), A1 * A0), 1e-15);
  EXPECT_THROW((void)cocycle_product(C, 2, 1), DomainError);
}

TEST(Cocycle, ConstantFibersGivePowers) {
  const Matrix T = random_contraction(4, 3);
  const Cocycle C = Cocycle::constant(Transformation::rotation_grid(1, 16), T);
  Matrix P = Matrix::Identity(4, 4);
  for (std::uint64_t n = 1; n <= 10; ++n) {
    P = P * T;
    EXPECT_LT(rel(cocycle_product(C, 5, n), P), 1e-12);
  }
}

TEST(Cocycle, CocycleIdentity) {
  std::vector<Matrix> fibers;
  for (std::uint64_t i = 0; i < 4; ++i) fibers.push_back(random_contraction(3, 40 + i));
  const Cocycle C(Transformation::rotation_grid(3, 32), fibers);
  for (std::size_t w : {0u, 7u, 31u}) {
    for (std::uint64_t m : {1u, 4u, 9u}) {
      for (std::uint64_t n : {2u, 5u}) {
        const std::size_t wm = C.base().map_index(w, m);
        EXPECT_LT(rel(cocycle_product(C, w, m + n), cocycle_product(C, w, m) * cocycle_product(C, wm, n)), 1e-12);
      }
    }
  }
}

TEST(Cocycle, RejectsNonContractionFibers) {
  EXPECT_THROW(Cocycle(Transformation::permutation({0}), {2.0 * Matrix::Identity(2, 2)}), DomainError);
  EXPECT_THROW(Cocycle(Transformation::permutation({1, 0}), {Matrix::Identity(2, 2)}), DomainError);
}

TEST(Skew, IdentityFibersGiveKoopman) {
  const Transformation base = Transformation::rotation_grid(5, 32);
  const LinearOperator S = skew_operator(Cocycle::constant(base, Matrix::Identity(2, 2)));
  const LinearOperator K = LinearOperator::koopman(base);
  const VectorField f = random_field(base.space(), 2, 3);
  EXPECT_EQ(S.apply_power(3, f).values, K.apply_power(3, f).values);
}

TEST(Skew, RankOneFieldFollowsCocycle) {
  std::vector<Matrix> fibers;
  for (std::uint64_t i = 0; i < 8; ++i) fibers.push_back(random_contraction(3, 60 + i));
  const Cocycle C(Transformation::permutation({3, 7, 0, 5, 1, 2, 6, 4}), fibers);
  const LinearOperator S = skew_operator(C);
  Vector g(3);
  g << cplx(1, 0), cplx(0, -2), cplx(0.5, 0.5);
  std::vector<cplx> h{1.0, -0.5, cplx(0, 1), 2.0, 0.25, cplx(1, 1), -1.0, 0.0};
  VectorField f = VectorField::zero(S.space(), 3);
  for (std::size_t w = 0; w < 8; ++w) f.values.row(static_cast<Eigen::Index>(w)) = (h[w] * g).transpose();
  for (std::uint64_t n : {1u, 4u, 11u}) {
    const VectorField out = S.apply_power(n, f);
    for (std::size_t w = 0; w < 8; ++w) {
      const Vector want = h[C.base().map_index(w, n)] * (cocycle_product(C, w, n) * g);
      EXPECT_LT((out.values.row(static_cast<Eigen::Index>(w)).transpose() - want).norm(), 1e-13);
    }
  }
}

TEST(TrigField, RotationOnMonteCarloPoints) {
  TrigField t;
  t.d = 1;
  Vector c(1);
  c(0) = 1.0;
  t.coeffs[3] = c;
  const TrigField r = t.rotated(0.1);
  for (double x : {0.0, 0.3, 0.77}) EXPECT_LT(std::abs(r.at(x)(0) - t.at(x + 0.1)(0)), 1e-14);
  const SampleSpace pts = SampleSpace::circle_points(8, 2);
  const Transformation rot = Transformation::rotation_points(std::sqrt(2.0) - 1.0, pts);
  EXPECT_NEAR(rot.map_turn(0.9, 1), std::fmod(0.9 + std::sqrt(2.0) - 1.0, 1.0), 1e-15);
}

TEST(OperatorJson, LoadsEveryKind) {
  using nlohmann::json;
  EXPECT_EQ(operator_from_json(json{{"kind", "rotation"}, {"theta", 0.25}, {"space", {{"kind", "circle"}, {"M", 16}}}})
                .space()
                .size(),
            16u);
  EXPECT_THROW(operator_from_json(json{{"kind", "rotation"}, {"theta", 0.3}, {"space", {{"kind", "circle"}, {"M", 16}}}}),
               DomainError);
  const LinearOperator P = operator_from_json(json{{"kind", "permutation"}, {"pi", {1, 2, 0}}});
  EXPECT_EQ(P.space().size(), 3u);
  const LinearOperator M =
      operator_from_json(json{{"kind", "matrix"}, {"matrix", {{0.5, json::array({0.0, 0.5})}, {0.0, 0.25}}}});
  EXPECT_EQ(M.matrix_data()(0, 1), cplx(0.0, 0.5));
  const LinearOperator K = operator_from_json(json{{"kind", "markov"}, {"m", 8}, {"seed", 3}});
  EXPECT_TRUE(K.is_dunford_schwartz());
  const LinearOperator S = operator_from_json(
      json{{"kind", "skew"}, {"base", {{"kind", "permutation"}, {"pi", {1, 0}}}}, {"d", 2}, {"seed", 4}});
  EXPECT_TRUE(S.is_contraction());
  EXPECT_THROW(operator_from_json(json{{"kind", "bogus"}}), DomainError);
}
