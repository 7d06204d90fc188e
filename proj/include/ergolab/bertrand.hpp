#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/exp_sinh.hpp>

#include "ergolab/error.hpp"
#include "ergolab/summation.hpp"
#include "ergolab/weight.hpp"
#include "ergolab/weight_expr.hpp"

namespace ergolab {

enum class Verdict { converges, diverges, unknown };
enum class VerdictSource { symbolic, numeric_heuristic };

[[nodiscard]] inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::converges:
      return "converges";
    case Verdict::diverges:
      return "diverges";
    case Verdict::unknown:
      return "unknown";
  }
  return "unknown";
}

[[nodiscard]] inline const char* to_string(VerdictSource s) {
  return s == VerdictSource::symbolic ? "symbolic" : "numeric-heuristic";
}

inline constexpr double kExponentTolerance = 1e-12;

/*!
  Bertrand criterion for sum_k k^a (ln k)^b (lnln k)^c, extended to classes
  carrying k^(s k): s < 0 always converges, s > 0 always diverges.
*/
[[nodiscard]] inline Verdict bertrand(const WeightExpr& cls) {
  const auto is = [](double x, double target) { return std::abs(x - target) <= kExponentTolerance; };
  if (cls.superexp < -kExponentTolerance) return Verdict::converges;
  if (cls.superexp > kExponentTolerance) return Verdict::diverges;
  if (!is(cls.a, -1.0)) return cls.a < -1.0 ? Verdict::converges : Verdict::diverges;
  if (!is(cls.b, -1.0)) return cls.b < -1.0 ? Verdict::converges : Verdict::diverges;
  if (!is(cls.c, -1.0)) return cls.c < -1.0 ? Verdict::converges : Verdict::diverges;
  return Verdict::diverges;
}

/*!
  Integral of the class over (K, inf), a bound on the tail sum past K when
  the term is decreasing and dominated by its class. nullopt when the class
  diverges or the integral is not finite.
*/
[[nodiscard]] inline std::optional<double> class_tail_integral(const WeightExpr& cls, double K) {
  if (bertrand(cls) != Verdict::converges) return std::nullopt;
  if (cls.superexp != 0.0) {
    // Consecutive ratios tend to 0; twice the next term bounds the tail eventually.
    return 2.0 * cls(K + 1.0);
  }
  const double s = cls.scale;
  const double a1 = cls.a + 1.0;
  const double L = std::log(K);
  if (cls.b == 0.0 && cls.c == 0.0) return s * std::pow(K, a1) / (-a1);
  if (std::abs(a1) <= kExponentTolerance) {
    if (cls.c == 0.0) return s * std::pow(L, cls.b + 1.0) / (-(cls.b + 1.0));
    if (std::abs(cls.b + 1.0) <= kExponentTolerance) {
      return s * std::pow(std::log(L), cls.c + 1.0) / (-(cls.c + 1.0));
    }
  }
  if (cls.c != 0.0 && !(L > 1.0)) return std::nullopt;
  // u = ln x:  integral over (ln K, inf) of e^{(a+1)u} u^b (ln u)^c du.
  const double b = cls.b, c = cls.c;
  auto f = [a1, b, c, L](double v) {
    const double u = L + v;
    double out = std::exp(a1 * v) * std::pow(u, b);
    if (c != 0.0) out *= std::pow(std::log(u), c);
    return out;
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  double err = 0.0;
  const double core = integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-10, &err);
  const double value = s * std::exp(a1 * L) * core;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

/// Truncation ladder shared by all reports.
struct Ladder {
  std::vector<index_t> points{100, 1'000, 10'000, 100'000, 1'000'000};

  [[nodiscard]] static Ladder standard(bool include_1e7 = false) {
    Ladder l;
    if (include_1e7) l.points.push_back(10'000'000);
    return l;
  }
};

/// Numeric evidence for a series of nonnegative terms.
struct SeriesDiagnostics {
  std::vector<std::pair<index_t, double>> partial_sums;
  index_t first_index = 1;
  index_t last_index = 0;   ///< last summed index (ladder top, or the cap)
  bool capped = false;      ///< the term sequence ended below the ladder top
  Verdict numeric = Verdict::unknown;
  double last_block_ratio = std::numeric_limits<double>::quiet_NaN();
  /// Fitted geometric decay rate per doubling of the dyadic blocks, when fitted.
  std::optional<double> block_decay;
};

namespace detail {

/// Least-squares fit of log b_j = c0 + c1 j + c2 ln j over the last eight
/// blocks; returns -c1 / ln 2 (the power excess s in b_j ~ 2^{-s j} j^t).
[[nodiscard]] inline std::optional<double> fit_block_decay(const std::vector<double>& blocks) {
  const std::size_t n = std::min<std::size_t>(8, blocks.size());
  if (n < 6) return std::nullopt;
  Eigen::MatrixXd A(static_cast<Eigen::Index>(n), 3);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = blocks.size() - n + i;
    if (!(blocks[j] > 0.0)) return std::nullopt;
    const auto r = static_cast<Eigen::Index>(i);
    A(r, 0) = 1.0;
    A(r, 1) = static_cast<double>(j);
    A(r, 2) = std::log(static_cast<double>(std::max<std::size_t>(j, 1)));
    y(r) = std::log(blocks[j]);
  }
  const Eigen::Vector3d c = A.colPivHouseholderQr().solve(y);
  return -c(1) / std::log(2.0);
}

}  // namespace detail

/*!
  Sums term(k) for k = first..., recording S_K at ladder points, and applies
  the brute-force heuristic: with K_hi the top summed index and
  K_lo = K_hi/100, S_hi - S_lo < 1e-3 S_lo claims convergence; a last
  dyadic block at least 0.9 times the block four doublings earlier claims
  divergence, unless a fit of the last blocks shows geometric decay per
  doubling above 0.01; otherwise indeterminate.
*/
[[nodiscard]] inline SeriesDiagnostics sum_series(const std::function<double(index_t)>& term, index_t first,
                                                  index_t last_available, const Ladder& ladder) {
  SeriesDiagnostics d;
  d.first_index = first;
  index_t top = 0;
  for (index_t K : ladder.points) {
    if (K >= first && K <= last_available) top = std::max(top, K);
  }
  if (top == 0) {
    top = last_available;
    d.capped = true;
  } else if (!ladder.points.empty() && top < ladder.points.back()) {
    d.capped = true;
  }
  if (top < first) {
    d.last_index = top;
    return d;
  }
  d.last_index = top;
  const index_t lo = std::max<index_t>(first, top >= 100 * first ? top / 100 : (first + top) / 2);

  KahanSum acc;
  KahanSum block;
  std::vector<double> blocks;  // blocks[j] = sum over [2^j, 2^{j+1})
  index_t next_block_start = 1;
  int j = 0;
  while (next_block_start * 2 <= first) {
    next_block_start *= 2;
    ++j;
  }
  blocks.assign(static_cast<std::size_t>(j), 0.0);
  index_t block_end = next_block_start * 2;

  double s_lo = 0.0;
  std::size_t li = 0;
  for (index_t k = first; k <= top; ++k) {
    const double t = term(k);
    if (!(t >= 0.0) || !std::isfinite(t)) {
      throw Error("series term at k=" + std::to_string(k) + " is not a finite nonnegative number");
    }
    acc.add(t);
    block.add(t);
    if (k + 1 == block_end) {
      blocks.push_back(block.value());
      block = KahanSum{};
      block_end *= 2;
    }
    if (k == lo) s_lo = acc.value();
    while (li < ladder.points.size() && ladder.points[li] < k) ++li;
    if (li < ladder.points.size() && ladder.points[li] == k) d.partial_sums.emplace_back(k, acc.value());
  }
  if (d.partial_sums.empty() || d.partial_sums.back().first != top) d.partial_sums.emplace_back(top, acc.value());
  const double s_hi = acc.value();

  const bool conv = s_lo > 0.0 ? (s_hi - s_lo) < 1e-3 * s_lo : s_hi == 0.0;
  bool div = false;
  if (blocks.size() >= 5) {
    const double last = blocks.back();
    const double earlier = blocks[blocks.size() - 5];
    if (earlier > 0.0) {
      d.last_block_ratio = last / earlier;
      div = last >= 0.9 * earlier;
    }
  }
  if (div) {
    // A log factor can hold the blocks flat over the available range even
    // though they decay geometrically; fit log b_j = c0 + c1 j + c2 ln j.
    d.block_decay = detail::fit_block_decay(blocks);
    if (d.block_decay && *d.block_decay > 0.01) div = false;
  }
  if (conv && !div) {
    d.numeric = Verdict::converges;
  } else if (div && !conv) {
    d.numeric = Verdict::diverges;
  }
  return d;
}

}  // namespace ergolab
