#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ergolab/error.hpp"
#include "ergolab/summation.hpp"
#include "ergolab/weight_expr.hpp"

namespace ergolab {

using index_t = std::uint64_t;

namespace detail {

inline constexpr index_t kLookahead = 64;
inline constexpr index_t kSearchLimit = 1'000'000;

// Smallest n >= start with f(n) >= 1 and f nondecreasing over the next 64 indices.
template <typename F>
index_t find_start_index(F&& f, index_t start) {
  for (index_t n = start; n < start + kSearchLimit; ++n) {
    double prev = f(n);
    if (!(prev >= 1.0) || !std::isfinite(prev)) continue;
    bool ok = true;
    for (index_t j = 1; j <= kLookahead; ++j) {
      const double cur = f(n + j);
      if (!(cur >= prev)) {
        ok = false;
        break;
      }
      prev = cur;
    }
    if (ok) return n;
  }
  throw WeightError("sequence never becomes a weight (value >= 1 and nondecreasing) before index " +
                    std::to_string(start + kSearchLimit));
}

inline index_t natural_start(const WeightExpr& e) {
  if (e.has_loglog()) return 3;
  if (e.has_log()) return 2;
  return 1;
}

}  // namespace detail

/*!
  A weight: a nondecreasing sequence with value >= 1 from its start index n0.

  Backed either by a power-log expression (symbolically analyzable) or by an
  arbitrary evaluator with an optional asymptotic class. Values are cached in
  an append-only table up to `memo_capacity`; indices past the table are
  evaluated directly, which gives the same bits. Cheap to copy; copies share
  the table.
*/
class WeightSeq {
 public:
  using Evaluator = std::function<double(index_t)>;

  static constexpr std::size_t chunk_bits = 16;
  static constexpr std::size_t chunk_size = std::size_t{1} << chunk_bits;
  static constexpr std::size_t max_chunks = 64;
  static constexpr index_t memo_capacity = index_t{chunk_size} * max_chunks;

  WeightSeq() = default;

  [[nodiscard]] static WeightSeq from_expr(const WeightExpr& e, std::optional<index_t> n0 = std::nullopt) {
    check_expr(e);
    auto st = std::make_shared<State>();
    st->expr = e;
    st->cls = e;
    st->name = to_string(e);
    st->fn = [e](index_t n) { return e(static_cast<double>(n)); };
    st->n0 = n0 ? validate_start(st->fn, *n0) : detail::find_start_index(st->fn, detail::natural_start(e));
    return WeightSeq(std::move(st));
  }

  [[nodiscard]] static WeightSeq parse(std::string_view text, std::optional<index_t> n0 = std::nullopt) {
    return from_expr(parse_weight(text), n0);
  }

  /// A weight given by an arbitrary evaluator; `cls` is its power-log class, if known.
  [[nodiscard]] static WeightSeq custom(std::string name, Evaluator f, std::optional<WeightExpr> cls = std::nullopt,
                                        std::optional<index_t> n0 = std::nullopt) {
    auto st = std::make_shared<State>();
    st->name = std::move(name);
    st->fn = std::move(f);
    st->cls = cls;
    st->n0 = n0 ? validate_start(st->fn, *n0) : detail::find_start_index(st->fn, 1);
    return WeightSeq(std::move(st));
  }

  [[nodiscard]] bool valid() const { return static_cast<bool>(s_); }
  [[nodiscard]] index_t n0() const { return s_->n0; }
  [[nodiscard]] const std::string& name() const { return s_->name; }

  /// The exact expression, when the weight is expression-backed.
  [[nodiscard]] const std::optional<WeightExpr>& expr() const { return s_->expr; }

  /// Power-log class of n -> W_n (the expression itself for expression-backed weights).
  [[nodiscard]] const std::optional<WeightExpr>& asymptotic() const { return s_->cls; }

  /*!
    Value at n, memoized. Extending the table audits monotonicity and throws
    WeightError on a decrease. Throws DomainError below n0. Safe to call
    concurrently: readers of the published prefix never block.
  */
  [[nodiscard]] double eval(index_t n) const {
    State& st = *s_;
    if (n < st.n0) throw DomainError("weight index " + std::to_string(n) + " below n0=" + std::to_string(st.n0));
    const index_t off = n - st.n0;
    if (off < st.ready.load(std::memory_order_acquire)) return st.slot(off);
    if (off >= memo_capacity) return st.fn(n);
    materialize(n);
    return st.slot(off);
  }

  double operator()(index_t n) const { return eval(n); }

  /// Value without touching the table (no allocation, no locking past the published prefix).
  [[nodiscard]] double value(index_t n) const {
    const State& st = *s_;
    if (n < st.n0) throw DomainError("weight index " + std::to_string(n) + " below n0=" + std::to_string(st.n0));
    const index_t off = n - st.n0;
    if (off < st.ready.load(std::memory_order_acquire)) return st.slot(off);
    return st.fn(n);
  }

  /// Fills the table through index N (single writer; audits monotonicity).
  void materialize(index_t N) const {
    State& st = *s_;
    if (N < st.n0) return;
    const index_t want = std::min<index_t>(N - st.n0 + 1, memo_capacity);
    std::lock_guard<std::mutex> lock(st.write);
    index_t have = st.ready.load(std::memory_order_relaxed);
    if (have >= want) return;
    double prev = have == 0 ? 1.0 : st.slot(have - 1);
    for (index_t off = have; off < want; ++off) {
      const std::size_t chunk = static_cast<std::size_t>(off >> chunk_bits);
      if (!st.chunks[chunk]) st.chunks[chunk] = std::make_unique<double[]>(chunk_size);
      const index_t n = st.n0 + off;
      const double v = st.fn(n);
      if (!std::isfinite(v)) throw WeightError(st.name + ": non-finite value at n=" + std::to_string(n));
      if (v < prev) {
        st.ready.store(off, std::memory_order_release);
        throw WeightError(st.name + ": not nondecreasing at n=" + std::to_string(n) + " (" +
                          detail::format_double(v) + " < " + detail::format_double(prev) + ")");
      }
      st.chunks[chunk][off & (chunk_size - 1)] = v;
      prev = v;
    }
    st.ready.store(want, std::memory_order_release);
  }

  /// 1 - W_n / W_{n+1}, computed without cancellation for expression-backed weights.
  [[nodiscard]] double one_minus_ratio(index_t n) const {
    if (s_->expr) {
      const WeightExpr& e = *s_->expr;
      const double x = static_cast<double>(n);
      const double d1 = std::log1p(1.0 / x);  // ln(n+1) - ln(n)
      double lr = 0.0;                        // ln W_{n+1} - ln W_n
      if (e.a != 0.0) lr += e.a * d1;
      if (e.b != 0.0 || e.c != 0.0) {
        const double ln_n = std::log(x);
        const double dl = std::log1p(d1 / ln_n);  // lnln(n+1) - lnln(n)
        if (e.b != 0.0) lr += e.b * dl;
        if (e.c != 0.0) lr += e.c * std::log1p(dl / std::log(ln_n));
      }
      return -std::expm1(-lr);
    }
    const double w0 = value(n);
    const double w1 = value(n + 1);
    return (w1 - w0) / w1;
  }

 private:
  struct State {
    std::optional<WeightExpr> expr;
    std::optional<WeightExpr> cls;
    std::string name;
    Evaluator fn;
    index_t n0 = 1;
    std::array<std::unique_ptr<double[]>, max_chunks> chunks{};
    std::atomic<index_t> ready{0};
    std::mutex write;

    [[nodiscard]] double slot(index_t off) const {
      return chunks[static_cast<std::size_t>(off >> chunk_bits)][off & (chunk_size - 1)];
    }
  };

  explicit WeightSeq(std::shared_ptr<State> s) : s_(std::move(s)) {}

  static void check_expr(const WeightExpr& e) {
    if (e.superexp != 0.0) throw DomainError("super-exponential classes are not weights in n");
    if (!(e.scale > 0.0) || !std::isfinite(e.scale)) throw DomainError("weight scale must be positive and finite");
  }

  static index_t validate_start(const Evaluator& f, index_t n0) {
    if (n0 == 0) throw DomainError("n0 must be a positive integer");
    const double v = f(n0);
    if (!(v >= 1.0)) {
      throw WeightError("value at n0=" + std::to_string(n0) + " is " + detail::format_double(v) + " < 1");
    }
    return n0;
  }

  std::shared_ptr<State> s_;
};

/*!
  G_{n,r} = G_n/|r| + sum_{k=n0}^{n-1} G_k/k. The prefix sums are kept
  compensated and extended incrementally, so evaluation is O(1) amortized.
*/
class TwistedWeight {
 public:
  TwistedWeight(WeightSeq G, double r) : st_(std::make_shared<State>()) {
    if (r == 0.0 || !std::isfinite(r)) throw DomainError("twisted weight needs a finite nonzero r");
    st_->G = std::move(G);
    st_->inv_r = 1.0 / std::abs(r);
  }

  [[nodiscard]] double operator()(index_t n) const {
    const index_t n0 = st_->G.n0();
    if (n < n0) throw DomainError("twisted weight index below n0");
    return st_->G.value(n) * st_->inv_r + prefix(n);
  }

  /// sum_{k=n0}^{n-1} G_k / k
  [[nodiscard]] double prefix(index_t n) const {
    State& st = *st_;
    const index_t n0 = st.G.n0();
    std::lock_guard<std::mutex> lock(st.m);
    if (st.prefix.empty()) st.prefix.push_back(0.0);
    while (n0 + st.prefix.size() - 1 < n) {
      const index_t k = n0 + st.prefix.size() - 1;
      st.acc.add(st.G.value(k) / static_cast<double>(k));
      st.prefix.push_back(st.acc.value());
    }
    return st.prefix[static_cast<std::size_t>(n - n0)];
  }

  /// As a weight sequence (class from `twisted_class` when G has one).
  [[nodiscard]] WeightSeq as_weight() const;

  [[nodiscard]] const WeightSeq& base() const { return st_->G; }

 private:
  struct State {
    WeightSeq G;
    double inv_r = 1.0;
    std::mutex m;
    std::vector<double> prefix;
    KahanSum acc;
  };
  std::shared_ptr<State> st_;
};

/*!
  Power-log class of G_{n,r}. The prefix sum of G_k/k dominates: for
  G ~ n^a (ln n)^b (lnln n)^c with a > 0 it is ~ G/a; in the slowly varying
  case (a = 0) it gains one power of ln n.
*/
[[nodiscard]] inline WeightExpr twisted_class(const WeightExpr& g, double r) {
  const double inv_r = 1.0 / std::abs(r);
  if (g.a > 0.0) return g.scaled(inv_r + 1.0 / g.a);
  if (g.a == 0.0 && g.b > -1.0) {
    WeightExpr out = g;
    out.b += 1.0;
    out.scale /= (g.b + 1.0);
    return out;
  }
  if (g.a == 0.0 && g.b == -1.0 && g.c > -1.0) {
    WeightExpr out = g;
    out.b = 0.0;
    out.c += 1.0;
    out.scale /= (g.c + 1.0);
    return out;
  }
  throw DomainError("twisted class needs a weight of nondecreasing power-log class");
}

inline WeightSeq TwistedWeight::as_weight() const {
  std::optional<WeightExpr> cls;
  if (const auto& g = st_->G.asymptotic()) cls = twisted_class(*g, 1.0 / st_->inv_r);
  TwistedWeight self = *this;
  return WeightSeq::custom("twisted(" + st_->G.name() + ", r=" + detail::format_double(1.0 / st_->inv_r) + ")",
                           [self](index_t n) { return self(n); }, cls, st_->G.n0());
}

[[nodiscard]] inline double twisted_weight(const WeightSeq& G, double r, index_t n) { return TwistedWeight(G, r)(n); }

/// Exponents (of G_n, of n) of the interpolated weight G_n^{(p)}; valid for p in [1,2].
[[nodiscard]] inline std::pair<double, double> interpolation_exponents(double p) {
  if (!(p >= 1.0 && p <= 2.0)) throw DomainError("interpolation exponent needs p in [1,2]");
  return {2.0 * (p - 1.0) / p, (2.0 - p) / p};
}

/// G_n^{(p)} = G_n^{2(p-1)/p} n^{(2-p)/p}, for 1 < p <= 2.
[[nodiscard]] inline double interpolated_weight(const WeightSeq& G, double p, index_t n) {
  if (!(p > 1.0 && p <= 2.0)) throw DomainError("interpolated weight needs 1 < p <= 2");
  if (p == 2.0) return G.eval(n);
  const auto [eg, en] = interpolation_exponents(p);
  return std::pow(G.eval(n), eg) * std::pow(static_cast<double>(n), en);
}

/// The interpolated weight as a sequence.
[[nodiscard]] inline WeightSeq interpolated(const WeightSeq& G, double p) {
  if (!(p > 1.0 && p <= 2.0)) throw DomainError("interpolated weight needs 1 < p <= 2");
  if (p == 2.0) return G;
  const auto [eg, en] = interpolation_exponents(p);
  std::optional<WeightExpr> cls;
  if (G.asymptotic()) cls = G.asymptotic()->pow(eg) * WeightExpr::power(en);
  return WeightSeq::custom("interp(" + G.name() + ", p=" + detail::format_double(p) + ")",
                           [G, p](index_t n) { return interpolated_weight(G, p, n); }, cls, G.n0());
}

/// The weight (1/delta) W_n, with n0 advanced until the value is >= 1.
[[nodiscard]] inline WeightSeq scale_weight(const WeightSeq& W, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("scale_weight needs delta > 0");
  if (delta == 1.0) return W;
  index_t n0 = W.n0();
  const double inv = 1.0 / delta;
  while (!(W.value(n0) * inv >= 1.0)) {
    if (n0 - W.n0() > detail::kSearchLimit) throw WeightError("scaled weight never reaches 1");
    ++n0;
  }
  if (W.expr()) return WeightSeq::from_expr(W.expr()->scaled(inv), n0);
  std::optional<WeightExpr> cls;
  if (W.asymptotic()) cls = W.asymptotic()->scaled(inv);
  return WeightSeq::custom(W.name() + " / " + detail::format_double(delta),
                           [W, inv](index_t n) { return W.value(n) * inv; }, cls, n0);
}

}  // namespace ergolab
