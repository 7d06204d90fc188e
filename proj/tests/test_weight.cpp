#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "ergolab/schedule.hpp"
#include "ergolab/weight.hpp"
#include "ergolab/weight_expr.hpp"

using namespace ergolab;

namespace {

WeightSeq ewa_W(double eps) {
  const double e = (1.0 + eps) / 4.0;
  return WeightSeq::custom(
      "ewa-W", [e](index_t n) {
        const double x = static_cast<double>(n);
        return std::pow(x, e) * std::sqrt(x * (x + 1.0));
      },
      WeightExpr::power(e + 1.0));
}

WeightSeq ewa_G() {
  return WeightSeq::custom(
      "ewa-G", [](index_t n) {
        const double x = static_cast<double>(n);
        return std::sqrt(x * (x + 1.0) / 2.0);
      },
      WeightExpr::power(1.0, 1.0 / std::sqrt(2.0)));
}

double ulp(double x) { return std::nextafter(std::abs(x), std::numeric_limits<double>::infinity()) - std::abs(x); }

}  // namespace

TEST(ParseWeight, ReadsPowerAndLogFactors) {
  const WeightExpr e = parse_weight("n^0.5 * ln(n)^1.3");
  EXPECT_EQ(e.scale, 1.0);
  EXPECT_EQ(e.a, 0.5);
  EXPECT_EQ(e.b, 1.3);
  EXPECT_EQ(e.c, 0.0);
}

TEST(ParseWeight, FoldsNumericFactorsIntoScale) {
  const WeightExpr e = parse_weight("2 * n^-1");
  EXPECT_EQ(e.scale, 2.0);
  EXPECT_EQ(e.a, -1.0);
  EXPECT_EQ(parse_weight("3^2*n").scale, 9.0);
}

TEST(ParseWeight, MergesRepeatedBases) {
  const WeightExpr merged = parse_weight("n^0.25 * n^0.25");
  EXPECT_EQ(merged, parse_weight("n^0.5"));
  const WeightExpr two_factor = parse_weight("lnln(n)^2 * ln(n) * lnln(n)^-0.5 * n");
  EXPECT_EQ(two_factor.c, 1.5);
  EXPECT_EQ(two_factor.b, 1.0);
  for (double n : {10.0, 100.0}) {
    EXPECT_NEAR(merged(n), std::pow(n, 0.25) * std::pow(n, 0.25), 1e-14 * merged(n));
  }
}

TEST(ParseWeight, AcceptsWhitespaceAndExponentNotation) {
  const WeightExpr e = parse_weight("  1.5e-1 *n ^ 2e0*ln ( n )");
  EXPECT_DOUBLE_EQ(e.scale, 0.15);
  EXPECT_EQ(e.a, 2.0);
  EXPECT_EQ(e.b, 1.0);
}

TEST(ParseWeight, ReportsErrorOffsets) {
  const auto offset_of = [](const std::string& text) -> std::ptrdiff_t {
    try {
      (void)parse_weight(text);
    } catch (const ParseError& e) {
      return static_cast<std::ptrdiff_t>(e.offset());
    }
    return -1;
  };
  EXPECT_EQ(offset_of(""), 0);
  EXPECT_EQ(offset_of("n^"), 2);
  EXPECT_EQ(offset_of("n * x"), 4);
  EXPECT_EQ(offset_of("n n"), 2);
  EXPECT_EQ(offset_of("ln(k)"), 3);
  EXPECT_EQ(offset_of("n *"), 3);
  EXPECT_EQ(offset_of("0 * n"), 0);
  EXPECT_EQ(offset_of("n^1e"), 4);
  EXPECT_EQ(offset_of("-n"), 0);
}

TEST(ParseWeight, CanonicalFormRoundTrips) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ex(-3.0, 3.0);
  std::uniform_real_distribution<double> sc(1e-3, 1e3);
  for (int i = 0; i < 200; ++i) {
    const WeightExpr e{sc(rng), ex(rng), ex(rng), ex(rng), 0.0};
    const WeightExpr back = parse_weight(to_string(e));
    EXPECT_EQ(back, e) << to_string(e);
    EXPECT_EQ(to_string(back), to_string(e));
  }
}

TEST(WeightSeq, EvaluatesExpressions) {
  const WeightSeq W = WeightSeq::parse("n");
  EXPECT_EQ(W.n0(), 1u);
  EXPECT_EQ(W.eval(7), 7.0);
  EXPECT_THROW((void)WeightSeq::parse("n", 1).eval(0), DomainError);
}

TEST(WeightSeq, EwaValues) {
  // 2^{3/8} sqrt(6), arbitrary-precision reference.
  EXPECT_NEAR(ewa_W(0.5).eval(2), 3.1765951871531529, 4e-16 * 3.18);
  EXPECT_DOUBLE_EQ(ewa_G().eval(2), std::sqrt(3.0));
}

TEST(WeightSeq, StartIndexRule) {
  EXPECT_EQ(WeightSeq::parse("ln(n)").n0(), 3u);             // ln 3 > 1
  EXPECT_EQ(WeightSeq::parse("lnln(n)").n0(), 16u);          // lnln n >= 1 iff n >= e^e
  EXPECT_EQ(WeightSeq::parse("n^0.5 * ln(n)").n0(), 3u);     // sqrt(2) ln 2 < 1
  EXPECT_EQ(WeightSeq::parse("n^0.1").n0(), 1u);
  EXPECT_THROW((void)WeightSeq::parse("n^-1"), WeightError);
  EXPECT_THROW((void)WeightSeq::parse("n", 1).eval(0), DomainError);
}

TEST(WeightSeq, MemoIsBitStableAndMatchesDirectEvaluation) {
  const WeightSeq W = WeightSeq::parse("n^0.7 * ln(n)^1.5 * lnln(n)");
  const double first = W.eval(12345);
  W.materialize(200000);
  EXPECT_EQ(W.eval(12345), first);
  EXPECT_EQ(W.value(12345), first);
  const WeightSeq fresh = WeightSeq::parse("n^0.7 * ln(n)^1.5 * lnln(n)");
  EXPECT_EQ(fresh.value(12345), first);
  // Past the table capacity values come from the same evaluator.
  const index_t far = WeightSeq::memo_capacity + 10;
  EXPECT_EQ(W.eval(far), fresh.value(far));
}

TEST(WeightSeq, MonotonicityAuditRejectsDecrease) {
  const WeightSeq bumpy = WeightSeq::custom(
      "bump", [](index_t n) { return n < 100 ? double(n) : 200.0 - double(n) / 2.0; }, std::nullopt, 1);
  EXPECT_EQ(bumpy.eval(90), 90.0);
  EXPECT_THROW(bumpy.materialize(150), WeightError);
}

TEST(WeightSeq, OneMinusRatioMatchesDirectForm) {
  const WeightSeq W = WeightSeq::parse("n^0.8 * ln(n)^0.5 * lnln(n)^2");
  for (index_t n : {20u, 1000u, 123456u}) {
    const double direct = 1.0 - W.value(n) / W.value(n + 1);
    EXPECT_NEAR(W.one_minus_ratio(n), direct, 1e-9 * direct);
  }
}

TEST(TwistedWeight, HandValues) {
  const WeightSeq G = WeightSeq::parse("n");
  EXPECT_EQ(twisted_weight(G, 1.0, 3), 5.0);
  EXPECT_EQ(twisted_weight(G, 2.0, 1), 0.5);
  EXPECT_EQ(twisted_weight(G, -0.7, 40), twisted_weight(G, 0.7, 40));
  EXPECT_THROW((void)twisted_weight(G, 0.0, 3), DomainError);
}

TEST(TwistedWeight, Telescopes) {
  const WeightSeq G = WeightSeq::parse("n^0.6 * ln(n)^2");
  for (double r : {0.5, 1.0, 3.0}) {
    const TwistedWeight T(G, r);
    for (index_t n = G.n0(); n < G.n0() + 5000; ++n) {
      const double lhs = T(n + 1) - T(n);
      const double rhs = (G.value(n + 1) - G.value(n)) / std::abs(r) + G.value(n) / double(n);
      EXPECT_NEAR(lhs, rhs, 4.0 * ulp(T(n + 1)));
    }
  }
}

TEST(TwistedWeight, ClassTracksValues) {
  const WeightSeq G = WeightSeq::parse("n^0.5");
  const WeightSeq T = TwistedWeight(G, 1.0).as_weight();
  ASSERT_TRUE(T.asymptotic().has_value());
  const double ratio = T.value(1000000) / (*T.asymptotic())(1e6);
  EXPECT_NEAR(ratio, 1.0, 1e-2);
}

TEST(InterpolatedWeight, EndpointsAndSpotValue) {
  const WeightSeq G = WeightSeq::parse("n^0.5");
  EXPECT_EQ(interpolated_weight(G, 2.0, 37), G.eval(37));
  EXPECT_NEAR(interpolated_weight(G, 1.5, 16), 6.3496042078727979, 4e-15);
  EXPECT_EQ(interpolation_exponents(2.0), std::make_pair(1.0, 0.0));
  EXPECT_EQ(interpolation_exponents(1.0), std::make_pair(0.0, 1.0));
  EXPECT_THROW((void)interpolated_weight(G, 1.0, 3), DomainError);
  EXPECT_THROW((void)interpolated_weight(G, 2.5, 3), DomainError);
}

TEST(InterpolatedWeight, LogIsLinearInExponents) {
  const WeightSeq G = WeightSeq::parse("n^0.75 * ln(n)^1.2");
  for (double p : {1.1, 1.25, 1.5, 1.75, 1.9}) {
    const auto [eg, en] = interpolation_exponents(p);
    for (index_t n = 3; n < 3000; n += 7) {
      const double lhs = std::log(interpolated_weight(G, p, n));
      const double rhs = eg * std::log(G.eval(n)) + en * std::log(double(n));
      const double scale = std::max({std::abs(lhs), std::abs(eg * std::log(G.eval(n))), std::abs(en * std::log(double(n)))});
      EXPECT_LE(std::abs(lhs - rhs), 4.0 * ulp(scale)) << "p=" << p << " n=" << n;
    }
  }
}

TEST(ScaleWeight, IdentityAndStartAdvance) {
  const WeightSeq W = WeightSeq::parse("n");
  const WeightSeq same = scale_weight(W, 1.0);
  EXPECT_EQ(same.n0(), W.n0());
  EXPECT_EQ(same.eval(11), W.eval(11));
  const WeightSeq half = scale_weight(W, 2.0);
  EXPECT_EQ(half.n0(), 2u);
  EXPECT_EQ(half.eval(9), 4.5);
  EXPECT_THROW((void)scale_weight(W, 0.0), DomainError);
  EXPECT_THROW((void)scale_weight(W, -1.0), DomainError);
}

TEST(ScaleWeight, TwistFactorBoundHolds) {
  // (G_{n,delta r} / (W_n/delta))^p <= (1+|delta-1|)^p (G_{n,r}/W_n)^p, term by term.
  const double delta = 3.0, p = 2.0, r = 1.0;
  const WeightSeq G = WeightSeq::parse("n");
  const WeightSeq W = WeightSeq::parse("n^1.5");
  const WeightSeq Ws = scale_weight(W, delta);
  const TwistedWeight Gr(G, r), Gdr(G, delta * r);
  for (index_t k = Ws.n0(); k <= 100; ++k) {
    const double lhs = std::pow(Gdr(k) / Ws.eval(k), p);
    const double rhs = std::pow(1.0 + std::abs(delta - 1.0), p) * std::pow(Gr(k) / W.eval(k), p);
    EXPECT_LE(lhs, rhs * (1.0 + 1e-14)) << k;
  }
}

TEST(Schedule, PowerMatchesFloorPlusOne) {
  const Schedule s = Schedule::power(2.0);
  EXPECT_EQ(s.at(1), 2u);
  EXPECT_EQ(s.at(10), 101u);
  const Schedule s43 = Schedule::power(4.0 / 3.0);
  EXPECT_EQ(s43.at(8), 17u);    // 8^{4/3} = 16 exactly
  EXPECT_EQ(s43.at(27), 82u);   // 27^{4/3} = 81 exactly
  EXPECT_EQ(s43.at(10), 22u);   // 10^{4/3} = 21.54
  const Schedule id = Schedule::identity();
  EXPECT_EQ(id.at(1), 1u);
  EXPECT_EQ(id.at(99), 99u);
  EXPECT_EQ(Schedule::power(2.0, Schedule::Rounding::floor).at(7), 49u);
  EXPECT_THROW((void)Schedule::power(0.5), DomainError);
  for (index_t k = 1; k < 10000; ++k) ASSERT_LT(s43.at(k), s43.at(k + 1));
  EXPECT_LE(s.at(s.size()), kScheduleCap);
}

TEST(Schedule, SuperexpIsCapped) {
  const Schedule s = Schedule::superexp();
  EXPECT_EQ(s.size(), 15u);
  EXPECT_EQ(s.at(3), 27u);
  EXPECT_EQ(s.at(15), 437893890380859375ULL);
}

TEST(Schedule, GeometricExplicitAndWeightDriven) {
  const Schedule g = Schedule::geometric(1.5);
  for (index_t k = 1; k < g.size(); ++k) ASSERT_LT(g.at(k), g.at(k + 1));
  EXPECT_THROW((void)Schedule::explicit_list({1, 3, 3}), DomainError);
  const Schedule e = Schedule::explicit_list({2, 5, 9});
  EXPECT_EQ(e.size(), 3u);
  EXPECT_EQ(e.first_index_at_least(3), 2u);
  const Schedule w = Schedule::weight_driven(WeightSeq::parse("n"));
  EXPECT_EQ(w.at(1), 1u);
  EXPECT_EQ(w.at(2), 3u);   // floor(1) + 1 + 1
  EXPECT_EQ(w.at(3), 7u);   // floor(3) + 3 + 1
}

TEST(GapSeq, DerivedGapsAreExact) {
  const Schedule s = Schedule::power(1.7);
  const GapSeq xi = GapSeq::derived();
  for (index_t k = 1; k < 500; ++k) EXPECT_EQ(xi.at(k, s), double(s.at(k + 1) - s.at(k)));
  EXPECT_THROW((void)GapSeq::explicit_list({1.0, 0.0}), DomainError);
}

TEST(AsymptoticClass, PowerSchedules) {
  const double beta = 0.25;
  const auto c = asymptotic_class(parse_weight("n^0.75"), Schedule::power(1.0 / beta));
  ASSERT_TRUE(c);
  EXPECT_DOUBLE_EQ(c->a, 3.0);
  const auto l = asymptotic_class(parse_weight("ln(n)"), Schedule::power(2.5));
  EXPECT_EQ(*l, (WeightExpr{2.5, 0.0, 1.0, 0.0, 0.0}));
  EXPECT_FALSE(asymptotic_class(parse_weight("n"), Schedule::geometric(2.0)));
}

TEST(AsymptoticClass, SuperexpComposition) {
  // (ln n)^{beta+1/p} (lnln n)^gamma at n_k = k^k, beta = 0.5, p = 2, gamma = 1.
  const auto c = asymptotic_class(parse_weight("ln(n)^1 * lnln(n)^1"), Schedule::superexp());
  EXPECT_EQ(*c, (WeightExpr{1.0, 1.0, 2.0, 0.0, 0.0}));
  const auto nk = asymptotic_class(parse_weight("n^-1"), Schedule::superexp());
  EXPECT_EQ(nk->superexp, -1.0);
}

TEST(AsymptoticClass, RatioSettlesForAppendixExpressions) {
  struct Case {
    const char* expr;
    double r;
  };
  const Case cases[] = {
      {"n^0.75", 4.0},       {"n^0.9", 4.0},        {"n^0.5", 2.0},       {"n^0.8", 2.0},
      {"n^0.6", 1.0},        {"n^0.75 * ln(n)", 4.0}, {"n^0.5 * ln(n)", 2.0}, {"n^0.5 * ln(n)^-1", 2.0},
      {"n^0.8 * ln(n)^-1", 2.0}, {"ln(n) * lnln(n)", 4.0 / 3.0}, {"n^0.75 * ln(n) * lnln(n)", 4.0 / 3.0},
      {"n^-0.8", 2.0},       {"n^1.2", 4.0},
  };
  for (const auto& c : cases) {
    const WeightExpr e = parse_weight(c.expr);
    const Schedule s = Schedule::power(c.r);
    const WeightExpr cls = *asymptotic_class(e, s);
    const auto ratio = [&](index_t k) { return e(double(s.at(k))) / cls(double(k)); };
    const double ref = ratio(10000);
    for (index_t k : {100u, 1000u, 10000u}) {
      EXPECT_NEAR(ratio(k) / ref, 1.0, 0.1) << c.expr << " r=" << c.r << " k=" << k;
    }
  }
}

TEST(DifferenceClass, Rules) {
  EXPECT_EQ(*difference_class(WeightExpr::power(2.0)), (WeightExpr{2.0, 1.0, 0.0, 0.0, 0.0}));
  EXPECT_EQ(*difference_class(WeightExpr{1.0, 0.0, 2.0, 0.0, 0.0}), (WeightExpr{2.0, -1.0, 1.0, 0.0, 0.0}));
  EXPECT_FALSE(difference_class(WeightExpr::constant(3.0)));
  // Gaps of k^k: (k+1)^{k+1} - k^k ~ e k k^k.
  const auto g = GapSeq::derived().asymptotic_class(Schedule::superexp());
  EXPECT_EQ(g->superexp, 1.0);
  EXPECT_EQ(g->a, 1.0);
  EXPECT_DOUBLE_EQ(g->scale, std::exp(1.0));
}
