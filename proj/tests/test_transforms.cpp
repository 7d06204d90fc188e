#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "ergolab/transforms.hpp"

using namespace ergolab;

namespace {

WeightSeq ewa_G() {
  return WeightSeq::custom(
      "ewa-G", [](index_t n) {
        const double x = static_cast<double>(n);
        return std::sqrt(x * (x + 1.0) / 2.0);
      },
      WeightExpr::power(1.0, 1.0 / std::sqrt(2.0)));
}

/// f_k(x) = sqrt(k) e^{2 pi i k x} on the M-point grid.
FieldSeq scaled_characters(std::size_t M) {
  const SampleSpace s = SampleSpace::circle_grid(M);
  return [s](index_t k) {
    VectorField f = VectorField::zero(s, 1);
    const double r = std::sqrt(static_cast<double>(k));
    for (std::size_t i = 0; i < s.size(); ++i) f.values(static_cast<Eigen::Index>(i), 0) = r * cis_turns(frac_mul(k, s.turn(i)));
    return f;
  };
}

double rel_diff(const VectorField& a, const VectorField& b) {
  const double scale = std::max(a.values.norm(), b.values.norm());
  return scale == 0.0 ? 0.0 : (a.values - b.values).norm() / scale;
}

std::vector<UnitPoint> lambda_grid(std::size_t count) {
  std::vector<UnitPoint> out;
  for (std::size_t j = 0; j < count; ++j) out.push_back(UnitPoint::grid(j, count));
  return out;
}

}  // namespace

TEST(WeightedAverage, ZeroAndConstantFields) {
  const SampleSpace s = SampleSpace::finite(3);
  const VectorField g = random_field(s, 2, 1);
  const FieldSeq zero = [&](index_t) { return VectorField::zero(s, 2); };
  const FieldSeq constant = [&](index_t) { return g; };
  const WeightSeq W = WeightSeq::parse("n");
  for (index_t n : {1, 5, 40}) {
    EXPECT_EQ(weighted_average(zero, W, n).values.norm(), 0.0);
    EXPECT_LT(rel_diff(weighted_average(constant, W, n), g), 1e-14);
  }
}

TEST(WeightedAverage, EwaOrthogonalFieldsHaveUnitNorm) {
  const FieldSeq f = scaled_characters(1024);
  const WeightSeq G = ewa_G();
  PrefixSum S;
  for (index_t n = 1; n <= 1000; ++n) {
    S.push(f(n));
    EXPECT_NEAR(S.sum().norm() / G.eval(n), 1.0, 1e-10) << n;
  }
  EXPECT_NEAR(weighted_average(f, G, 37).norm(), 1.0, 1e-10);
}

TEST(WeightedSeries, BaseCaseAndZero) {
  const SampleSpace s = SampleSpace::finite(4);
  const WeightSeq W = WeightSeq::parse("n^0.7 * ln(n)");
  const FieldSeq f = [&](index_t k) { return random_field(s, 2, k); };
  const auto [direct, abel] = weighted_series(f, W, W.n0());
  VectorField want = f(W.n0());
  want.values /= W.eval(W.n0());
  EXPECT_LT(rel_diff(direct, want), 1e-15);
  EXPECT_LT(rel_diff(abel, want), 1e-15);
  const FieldSeq zero = [&](index_t) { return VectorField::zero(s, 2); };
  const auto [d0, a0] = weighted_series(zero, W, 30);
  EXPECT_EQ(d0.values.norm(), 0.0);
  EXPECT_EQ(a0.values.norm(), 0.0);
}

TEST(WeightedSeries, AbelIdentityOnRandomInstances) {
  const SampleSpace s = SampleSpace::finite(3);
  const std::vector<WeightSeq> weights{WeightSeq::parse("n"), WeightSeq::parse("n^0.6"),
                                       WeightSeq::parse("n^0.9 * ln(n)^2"), WeightSeq::parse("n * lnln(n)")};
  for (std::uint64_t inst = 0; inst < 100; ++inst) {
    const WeightSeq& W = weights[inst % weights.size()];
    const FieldSeq f = [&](index_t k) { return random_field(s, 2, inst * 100003 + k); };
    for (index_t n : {1, 2, 17, 256}) {
      if (n < W.n0()) continue;
      const auto [direct, abel] = weighted_series(f, W, n);
      EXPECT_LT(rel_diff(direct, abel), 1e-10) << inst << " " << n;
    }
  }
  const FieldSeq f = [&](index_t k) { return random_field(s, 2, 7 + k); };
  const auto [direct, abel] = weighted_series(f, weights[0], 4096);
  EXPECT_LT(rel_diff(direct, abel), 1e-10);
}

TEST(ModulatedPoly, HandValues) {
  const Schedule id = Schedule::identity();
  const ModulationSeq one = ModulationSeq::constant(1.0);
  EXPECT_NEAR(std::abs(modulated_poly(one, id, 9, UnitPoint::grid(0, 1)) - cplx(9.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(modulated_poly(one, id, 3, UnitPoint::grid(1, 3))), 0.0, 1e-15);
  const ModulationSeq alt = ModulationSeq::explicit_list({-1.0, 1.0, -1.0, 1.0, -1.0});
  EXPECT_NEAR(std::abs(modulated_poly(alt, id, 5, UnitPoint::grid(1, 2)) - cplx(5.0)), 0.0, 1e-14);
}

TEST(SupCircle, TrivialCases) {
  const Schedule id = Schedule::identity();
  const CircleSup all_ones = sup_circle(ModulationSeq::constant(1.0), id, 50, 256);
  EXPECT_NEAR(all_ones.value, 50.0, 1e-12);
  EXPECT_NEAR(all_ones.argmax_turn, 0.0, 1e-9);
  const ModulationSeq single = ModulationSeq::explicit_list({cplx(0.6, -0.8) * 2.0});
  const CircleSup one = sup_circle(single, id, 1, 16);
  EXPECT_NEAR(one.value, 2.0, 1e-14);
  EXPECT_NEAR(one.grid_max, 2.0, 1e-14);
  EXPECT_EQ(sup_circle(ModulationSeq::zero(), id, 10, 64).value, 0.0);
}

TEST(SupCircle, ChirpMatchesDenseScan) {
  const Schedule id = Schedule::identity();
  const ModulationSeq chirp = ModulationSeq::chirp(0.3);
  const CircleSup got = sup_circle(chirp, id, 64, 256);
  double dense = 0.0;
  for (int j = 0; j < 1'000'000; ++j) dense = std::max(dense, modulated_abs_at_turn(chirp, id, 64, j / 1e6));
  EXPECT_NEAR(got.value, dense, 1e-6 * dense);
  EXPECT_GE(got.value, got.grid_max);
}

TEST(SupCircle, GridDominatesEveryGridPoint) {
  const Schedule sq = Schedule::power(2.0, Schedule::Rounding::floor);
  const ModulationSeq a = ModulationSeq::chirp(0.17);
  const index_t n = 20;
  const std::size_t M = oversampled_grid(sq, n);
  const CircleSup got = sup_circle(a, sq, n, M);
  for (std::size_t j = 0; j < M; j += 7) {
    EXPECT_GE(got.grid_max * (1 + 1e-12), std::abs(modulated_poly(a, sq, n, UnitPoint::grid(j, M))));
  }
}

TEST(SupCircle, CoarseGridIsRejected) {
  const Schedule id = Schedule::identity();
  EXPECT_THROW((void)sup_circle(ModulationSeq::constant(1.0), id, 100, 256), DomainError);
  EXPECT_TRUE(sup_circle(ModulationSeq::constant(1.0), id, 100, 256, true).coarse);
}

TEST(MeasureK, AllOnesIsOne) {
  const KMeasure K = measure_K(ModulationSeq::constant(1.0), Schedule::identity(), WeightSeq::parse("n"), 128);
  EXPECT_NEAR(K.K, 1.0, 1e-12);
}

TEST(MeasureK, BlockedScanMatchesDirectGrid) {
  // Several tiles, a run length that does not divide the tile tail, a chirp.
  const ModulationSeq a = ModulationSeq::chirp(0.37);
  const Schedule s = Schedule::power(1.5);
  const WeightSeq G = WeightSeq::parse("n^0.5");
  const index_t n_max = 64;
  const std::size_t M = 8192 + 96;
  const KMeasure K = measure_K(a, s, G, n_max, M);
  double best = 0.0;
  index_t n_at = 0;
  for (std::size_t j = 0; j < M; ++j) {
    const UnitPoint lam = UnitPoint::grid(j, M);
    cplx psi = 0.0;
    for (index_t k = 1; k <= n_max; ++k) {
      psi += a.at(k, s) * lam.pow(s.at(k));
      const double r = std::abs(psi) / G.value(k);
      if (r > best) {
        best = r;
        n_at = k;
      }
    }
  }
  EXPECT_NEAR(K.K_grid, best, 1e-10 * best);
  EXPECT_EQ(K.n_at, n_at);
  EXPECT_GE(K.K, K.K_grid);
}

TEST(TwistedBound, ZeroModulation) {
  const BoundCheck c = twisted_bound_check(ModulationSeq::zero(), Schedule::identity(), WeightSeq::parse("n"), 1.0, {1.0},
                                           lambda_grid(16), {8, 16});
  EXPECT_EQ(c.max_ratio, 0.0);
  EXPECT_TRUE(c.ok());
}

TEST(TwistedBound, AllOnesWithMeasuredK) {
  const Schedule id = Schedule::identity();
  const WeightSeq G = WeightSeq::parse("n");
  const ModulationSeq one = ModulationSeq::constant(1.0);
  const KMeasure K = measure_K(one, id, G, 512);
  std::vector<index_t> ladder;
  for (index_t n = 1; n <= 512; n *= 2) ladder.push_back(n);
  const BoundCheck c = twisted_bound_check(one, id, G, K.K, {0.5, 1.0, 2.0}, lambda_grid(256), ladder);
  EXPECT_LE(c.max_ratio, 1.0 + 1e-6) << c.worst;
  EXPECT_GT(c.evaluations, 0u);
}

TEST(TwistedBound, RatioDecreasesWithR) {
  const Schedule id = Schedule::identity();
  const WeightSeq G = WeightSeq::parse("n^0.5");
  const ModulationSeq a = ModulationSeq::chirp(0.3);
  const KMeasure K = measure_K(a, id, G, 256);
  double prev = std::numeric_limits<double>::infinity();
  for (double r : {16.0, 64.0, 256.0, 1024.0, 4096.0}) {
    const BoundCheck c = twisted_bound_check(a, id, G, K.K, {r}, lambda_grid(64), {256});
    EXPECT_LT(c.max_ratio, prev) << r;
    prev = c.max_ratio;
  }
}

TEST(RieszThorin, Endpoints) {
  EXPECT_DOUBLE_EQ(riesz_thorin_bound(100, 1.0, 1.5, 40.0, 2.0), 60.0);
  EXPECT_DOUBLE_EQ(riesz_thorin_bound(100, 0.5, 1.5, 40.0, 1.0), 50.0);
  EXPECT_NEAR(riesz_thorin_bound(100, 1.0, 1.0, 10.0, 1.5), std::pow(100.0, 1.0 / 3.0) * std::pow(10.0, 2.0 / 3.0),
              1e-12);
  EXPECT_THROW((void)riesz_thorin_bound(1, 1, 1, 1, 2.5), DomainError);
}

TEST(InterpolationBound, DoublyStochasticMarkov) {
  const LinearOperator T = LinearOperator::markov(random_doubly_stochastic(8, 5));
  const Schedule id = Schedule::identity();
  const WeightSeq G = WeightSeq::parse("n");
  const ModulationSeq one = ModulationSeq::constant(1.0);
  const double K = measure_K(one, id, G, 256).K;
  std::vector<VectorField> fields;
  for (std::uint64_t s = 0; s < 20; ++s) fields.push_back(random_field(T.space(), 1, 500 + s));
  const BoundCheck c = interpolation_bound_check(one, T, id, G, K, 1.5, fields, {1, 2, 4, 16, 64, 256});
  EXPECT_LE(c.max_ratio, 1.0 + 1e-8) << c.worst;
  const LinearOperator D = LinearOperator::koopman(Transformation::doubling(16));
  EXPECT_THROW((void)interpolation_bound_check(one, D, id, G, K, 1.5, {}, {4}), DomainError);
}

TEST(HilbertPartial, ZeroAndScalarReduction) {
  const SampleSpace s = SampleSpace::finite(4);
  const LinearOperator I = LinearOperator::matrix(Matrix::Identity(2, 2), s);
  const VectorField f = random_field(s, 2, 3);
  const WeightSeq W = WeightSeq::parse("n^1.5");
  const Schedule id = Schedule::identity();
  EXPECT_EQ(hilbert_partial(ModulationSeq::zero(), I, id, W, f, 50).values.norm(), 0.0);
  KahanSum inv;
  for (index_t k = 1; k <= 50; ++k) inv.add(1.0 / W.eval(k));
  VectorField want = f;
  want.values *= inv.value();
  EXPECT_LT(rel_diff(hilbert_partial(ModulationSeq::constant(1.0), I, id, W, f, 50), want), 1e-14);
}

TEST(HilbertPartial, RotatedModulationMatchesDirectSum) {
  const SampleSpace s = SampleSpace::finite(2);
  const Matrix A = random_contraction(3, 8);
  const LinearOperator T = LinearOperator::matrix(A, s);
  const VectorField f = random_field(s, 3, 4);
  const Schedule sched = Schedule::power(1.5);
  const WeightSeq W = WeightSeq::parse("n^0.8");
  const UnitPoint lambda = UnitPoint::from_turns(std::sqrt(2.0) - 1.0);
  const ModulationSeq a = ModulationSeq::rotation(lambda);
  const VectorField got = hilbert_partial(a, T, sched, W, f, 40);
  VectorField want = VectorField::zero(s, 3);
  Matrix P = Matrix::Identity(3, 3);
  index_t pos = 0;
  for (index_t k = 1; k <= 40; ++k) {
    for (; pos < sched.at(k); ++pos) P = P * A;
    want.values += (lambda.pow(sched.at(k)) / W.eval(k)) * (f.values * P.transpose());
  }
  EXPECT_LT(rel_diff(got, want), 1e-12);
}

TEST(HilbertPartial, Homogeneity) {
  const LinearOperator T = LinearOperator::koopman(Transformation::rotation_grid(5, 64));
  const Schedule sched = Schedule::power(2.0, Schedule::Rounding::floor);
  const WeightSeq W = WeightSeq::parse("n^0.75 * ln(n)");
  const ModulationSeq a = ModulationSeq::chirp(0.21);
  const VectorField f = random_field(T.space(), 2, 9);
  const VectorField g = random_field(T.space(), 2, 10);
  const VectorField base = hilbert_partial(a, T, sched, W, f, 200);
  VectorField f2 = f;
  f2.values *= 0.5;
  const VectorField scaled_f = hilbert_partial(a, T, sched, W, f2, 200);
  const VectorField scaled_a = hilbert_partial(a.scaled(2.0), T, sched, W, f, 200);
  for (Eigen::Index i = 0; i < base.values.size(); ++i) {
    const double tol = 4 * std::numeric_limits<double>::epsilon() * std::abs(base.values(i));
    EXPECT_NEAR(std::abs(scaled_f.values(i) * 2.0 - base.values(i)), 0.0, tol);
    EXPECT_NEAR(std::abs(scaled_a.values(i) * 0.5 - base.values(i)), 0.0, tol);
  }
  VectorField fg = f;
  fg.values += g.values;
  VectorField sum = base;
  sum.values += hilbert_partial(a, T, sched, W, g, 200).values;
  EXPECT_LT(rel_diff(hilbert_partial(a, T, sched, W, fg, 200), sum), 1e-13);
}

TEST(HilbertPartial, RequiresOperatorFlags) {
  Matrix J = Matrix::Zero(2, 2);
  J(0, 0) = 1.5;
  const LinearOperator T = LinearOperator::matrix(J, SampleSpace::finite(1), 16);
  ASSERT_FALSE(T.power_bounded());
  const VectorField f = random_field(T.space(), 2, 1);
  EXPECT_THROW((void)hilbert_partial(ModulationSeq::constant(1.0), T, Schedule::identity(), WeightSeq::parse("n"), f, 4),
               DomainError);
}

TEST(PhiSeries, ReducesAtZeroAndIsDominatedAtOne) {
  const LinearOperator T = LinearOperator::markov(random_doubly_stochastic(8, 2));
  const Schedule sched = Schedule::power(1.5);
  const WeightSeq W = WeightSeq::parse("n^0.5");
  const ModulationSeq a = ModulationSeq::chirp(0.4);
  const VectorField f = random_field(T.space(), 1, 5);
  const double beta = 0.75;
  const VectorField h = hilbert_partial(a, T, sched, W, f, 300);
  EXPECT_EQ(phi_series(a, T, sched, W, beta, 0.0, f, 300).values, h.values);

  const AdmissibilityReport t73 = check_T73(W, beta);
  ASSERT_TRUE(t73.converges());
  const VectorField phi1 = phi_series(a, T, sched, W, beta, 1.0, f, 300);
  double max_orbit = 0.0;
  KahanSum series;
  for (index_t k = 1; k <= 300; ++k) {
    max_orbit = std::max(max_orbit, T.apply_power(sched.at(k), f).norm());
    series.add(1.0 / (std::pow(static_cast<double>(k), beta) * W.eval(k)));
  }
  EXPECT_LE(phi1.norm(), a.sup_bound() * max_orbit * series.value() * (1 + 1e-12));
  EXPECT_THROW((void)phi_series(a, T, sched, W, beta, 1.5, f, 10), DomainError);
  EXPECT_DOUBLE_EQ((2.0 - 1.5) / 1.5, 1.0 / 3.0);
}

TEST(Trace, RunningMaxIsMonotoneAndStabilizes) {
  const std::size_t M = 64;
  const LinearOperator T = LinearOperator::koopman(Transformation::rotation_grid(1, M));
  VectorField f0 = random_field(T.space(), 1, 12);
  f0.values.array() -= f0.values.mean();
  std::vector<VectorField> orbit{f0};
  for (std::size_t j = 1; j < M; ++j) orbit.push_back(T.apply(orbit.back()));
  const FieldSeq f = [&](index_t k) { return orbit[k % M]; };
  const WeightSeq W = WeightSeq::parse("n^0.8");
  const std::vector<index_t> ladder{10, 100, 1000, 10000, 100000};
  const TransformTrace tr = slln_trace(f, W, ladder);
  ASSERT_EQ(tr.size(), ladder.size());
  for (std::size_t i = 1; i < tr.size(); ++i) {
    EXPECT_GT(tr[i].n, tr[i - 1].n);
    EXPECT_GE(tr[i].running_max_Lp, tr[i - 1].running_max_Lp);
  }
  EXPECT_LT(tr[4].running_max_Lp / tr[3].running_max_Lp - 1.0, 0.05);
  EXPECT_LT(tr[4].norm_Sn_over_Wn, tr[1].norm_Sn_over_Wn);
}

TEST(Trace, HilbertTraceRows) {
  const LinearOperator T = LinearOperator::koopman(Transformation::rotation_grid(3, 32));
  const VectorField f = random_field(T.space(), 1, 2);
  const TransformTrace tr = hilbert_trace(ModulationSeq::constant(1.0), T, Schedule::identity(), WeightSeq::parse("n^1.2"),
                                          f, {4, 16, 64});
  ASSERT_EQ(tr.size(), 3u);
  EXPECT_NEAR(tr[2].series_partial_norm,
              hilbert_partial(ModulationSeq::constant(1.0), T, Schedule::identity(), WeightSeq::parse("n^1.2"), f, 64)
                  .norm(),
              1e-14);
  EXPECT_GE(tr[2].running_max_Lp, tr[1].running_max_Lp);
  EXPECT_TRUE(std::isnan(tr[0].sup_circle));
}

TEST(Opnorm, ZeroModulationAndScalarCase) {
  const Schedule id = Schedule::identity();
  const WeightSeq W = WeightSeq::parse("n^1.5");
  const WeightSeq G = WeightSeq::parse("n");
  const OpnormReport zero = opnorm_series(ModulationSeq::zero(), random_contraction(3, 1), id, W, G, 0.0, {32, 64, 128});
  for (const auto& r : zero.rows) EXPECT_EQ(r.gap, 0.0);

  const OpnormReport scalar =
      opnorm_series(ModulationSeq::constant(1.0), Matrix::Identity(2, 2), id, W, G, 1.0, {32, 64, 128}, 100000);
  ASSERT_EQ(scalar.rows.size(), 2u);
  KahanSum block;
  for (index_t k = 33; k <= 64; ++k) block.add(1.0 / W.eval(k));
  EXPECT_NEAR(scalar.rows[0].gap, block.value(), 1e-15);
  EXPECT_TRUE(scalar.bounded());
  EXPECT_NEAR(scalar.K_direct, 1.0, 1e-12);
}

TEST(Opnorm, RandomContractionWithE5Weights) {
  const Schedule id = Schedule::identity();
  const WeightSeq G = WeightSeq::parse("n^0.75");
  const WeightSeq W = WeightSeq::parse("n^0.9");
  const ModulationSeq a = ModulationSeq::chirp(std::sqrt(2.0) - 1.0);
  std::vector<index_t> ladder;
  for (index_t n = 32; n <= 4096; n *= 2) ladder.push_back(n);
  const double K = measure_K(a, id, G, 4096).K;
  const OpnormReport rep = opnorm_series(a, random_contraction(6, 3), id, W, G, K, ladder);
  EXPECT_TRUE(rep.monotone);
  EXPECT_TRUE(rep.bounded());
  EXPECT_LE(rep.K_direct, K * (1 + 1e-12));
}

TEST(Sigma, ZeroAndSingleTerm) {
  const WeightSeq G = WeightSeq::parse("n");
  const Schedule id = Schedule::identity();
  const SigmaModel one(G, id, 1, 0.5);
  EXPECT_EQ(one.at(0.0).lower, 0.0);
  EXPECT_EQ(one.at(0.0).upper, 0.0);
  for (double t : {0.3, 1.0, 2.5}) EXPECT_NEAR(one.at(t).lower, 2.0 * std::abs(std::sin(t / 2.0)), 1e-15);
  const SigmaModel many(G, id, 1000, 0.5);
  const auto v = many.at(1.3);
  EXPECT_LT(v.lower, v.upper);
}

TEST(Sigma, GridMatchesDirectEvaluation) {
  const SigmaModel m(WeightSeq::parse("n"), Schedule::power(2.0, Schedule::Rounding::floor), 2000, 0.5);
  const std::size_t L = 1024;
  const auto grid = m.on_grid(L);
  for (std::size_t j = 0; j < L; j += 37) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(L);
    const double a = grid[j].lower, b = m.at(t).lower;
    EXPECT_NEAR(a * a, b * b, 1e-12) << j;
  }
}

TEST(Sigma, PointwiseBoundWithGamma) {
  const WeightSeq G = WeightSeq::parse("n");
  const Schedule id = Schedule::identity();
  const double alpha = 0.5;
  const AdmissibilityReport g = check_1RT1(G, id, alpha);
  ASSERT_TRUE(g.converges());
  const double gamma = *g.value + g.tail_bound.value_or(0.0);
  const SigmaModel m(G, id, 10000, alpha);
  for (int j = 0; j <= 400; ++j) {
    const double t = 2.0 * std::numbers::pi * j / 400.0;
    EXPECT_LE(m.at(t).upper, sigma_pointwise_bound(t, alpha, gamma) * (1 + 1e-12)) << t;
  }
}

TEST(Rearrangement, ZeroAndEquimeasurable) {
  const Rearrangement z = rearrangement_and_I(std::vector<double>(64, 0.0));
  EXPECT_EQ(z.I, 0.0);
  EXPECT_FALSE(z.diverged);
  std::vector<double> s{0.0, 3.0, 1.0, 2.0, 0.5, 2.0};
  const Rearrangement r = rearrangement_and_I(s);
  EXPECT_TRUE(std::is_sorted(r.sigma_bar.begin(), r.sigma_bar.end()));
  std::sort(s.begin(), s.end());
  EXPECT_EQ(r.sigma_bar, s);
  EXPECT_TRUE(std::isfinite(r.I));
  EXPECT_TRUE(rearrangement_and_I({1.0, 2.0}).diverged);
}

TEST(Rearrangement, IntegralBelowMajorant) {
  const WeightSeq G = WeightSeq::parse("n");
  const Schedule id = Schedule::identity();
  const double alpha = 0.5;
  const SigmaModel m(G, id, 20000, alpha);
  const auto grid = m.on_grid(1 << 12);
  std::vector<double> upper;
  for (const auto& v : grid) upper.push_back(v.upper);
  const Rearrangement r = rearrangement_and_I(upper);
  ASSERT_FALSE(r.diverged);
  const double gamma = m.gamma_truncated() + m.tail_gamma().value();
  EXPECT_LE(r.I, I_majorant(alpha, gamma));
  EXPECT_GT(r.I, 0.0);
}

TEST(Majorant, TrapezoidMatchesClosedForm) {
  for (double alpha : {0.25, 0.5, 0.9}) {
    EXPECT_NEAR(sigma_majorant_integral(alpha), sigma_majorant_closed(alpha), 1e-8 * sigma_majorant_closed(alpha));
  }
}
