#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ergolab/error.hpp"
#include "ergolab/weight.hpp"
#include "ergolab/weight_expr.hpp"

namespace ergolab {

/// Largest index value any schedule may produce.
inline constexpr index_t kScheduleCap = index_t{1} << 62;

/*!
  A strictly increasing sequence of positive integers n_1 < n_2 < ...,
  indexed from k = 1.
*/
class Schedule {
 public:
  enum class Kind { power, superexp, geometric, explicit_list, weight_driven };
  enum class Rounding { floor_plus_one, floor };

  /// n_k = floor(k^r) + 1 (or floor(k^r)); r >= 1.
  [[nodiscard]] static Schedule power(double r, Rounding rounding = Rounding::floor_plus_one) {
    if (!(r >= 1.0) || !std::isfinite(r)) throw DomainError("power schedule needs r >= 1");
    Schedule s(Kind::power);
    s.r_ = r;
    s.rounding_ = rounding;
    // Largest k with n_k <= cap.
    index_t hi = static_cast<index_t>(std::floor(std::pow(static_cast<long double>(kScheduleCap), 1.0L / r)));
    while (hi > 1 && s.power_value(hi).value_or(kScheduleCap + 1) > kScheduleCap) --hi;
    s.size_ = hi;
    return s;
  }

  /// n_k = k.
  [[nodiscard]] static Schedule identity() { return power(1.0, Rounding::floor); }

  /// n_k = k^k, for k <= 15 (the last k with k^k <= 2^62).
  [[nodiscard]] static Schedule superexp() {
    Schedule s(Kind::superexp);
    std::vector<index_t> v;
    for (index_t k = 1;; ++k) {
      index_t n = 1;
      bool over = false;
      for (index_t j = 0; j < k; ++j) {
        if (n > kScheduleCap / k) {
          over = true;
          break;
        }
        n *= k;
      }
      if (over || n > kScheduleCap) break;
      v.push_back(n);
    }
    s.set_list(std::move(v));
    return s;
  }

  /// n_k = max(n_{k-1} + 1, floor(q^k) + 1); q > 1.
  [[nodiscard]] static Schedule geometric(double q) {
    if (!(q > 1.0) || !std::isfinite(q)) throw DomainError("geometric schedule needs q > 1");
    Schedule s(Kind::geometric);
    s.r_ = q;
    std::vector<index_t> v;
    index_t prev = 0;
    for (index_t k = 1;; ++k) {
      const long double x = std::pow(static_cast<long double>(q), static_cast<long double>(k));
      if (x >= static_cast<long double>(kScheduleCap)) break;
      const index_t n = std::max<index_t>(prev + 1, static_cast<index_t>(std::floor(x)) + 1);
      if (n > kScheduleCap) break;
      v.push_back(n);
      prev = n;
    }
    s.set_list(std::move(v));
    return s;
  }

  [[nodiscard]] static Schedule explicit_list(std::vector<index_t> v) {
    if (v.empty()) throw DomainError("explicit schedule is empty");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] == 0) throw DomainError("schedule entries must be positive");
      if (i > 0 && v[i] <= v[i - 1]) throw DomainError("schedule must be strictly increasing");
    }
    Schedule s(Kind::explicit_list);
    s.set_list(std::move(v));
    return s;
  }

  /// n_1 = n0(G), n_{k+1} = floor(G_{n_k}) + n_k + 1.
  [[nodiscard]] static Schedule weight_driven(const WeightSeq& G) {
    Schedule s(Kind::weight_driven);
    std::vector<index_t> v;
    index_t n = G.n0();
    while (true) {
      v.push_back(n);
      const double g = std::floor(G.value(n));
      if (!(g < static_cast<double>(kScheduleCap - n - 1))) break;
      const index_t next = static_cast<index_t>(g) + n + 1;
      if (next > kScheduleCap) break;
      n = next;
    }
    s.set_list(std::move(v));
    s.driver_ = G;
    return s;
  }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] double r() const { return r_; }
  [[nodiscard]] Rounding rounding() const { return rounding_; }

  /// Number of available entries (bounded by the 2^62 cap).
  [[nodiscard]] index_t size() const { return size_; }

  /// Driving weight of a weight-driven schedule.
  [[nodiscard]] const std::optional<WeightSeq>& driver() const { return driver_; }

  /// n_k for 1 <= k <= size().
  [[nodiscard]] index_t at(index_t k) const {
    if (k == 0 || k > size_) {
      throw DomainError("schedule index " + std::to_string(k) + " outside [1, " + std::to_string(size_) + "]");
    }
    if (kind_ == Kind::power) return *power_value(k);
    return (*list_)[static_cast<std::size_t>(k - 1)];
  }

  index_t operator[](index_t k) const { return at(k); }

  /// Smallest k with n_k >= n (size()+1 if none).
  [[nodiscard]] index_t first_index_at_least(index_t n) const {
    index_t lo = 1, hi = size_ + 1;
    while (lo < hi) {
      const index_t mid = lo + (hi - lo) / 2;
      if (at(mid) >= n) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    return lo;
  }

  [[nodiscard]] std::string describe() const {
    switch (kind_) {
      case Kind::power:
        return std::string(rounding_ == Rounding::floor ? "power-floor:" : "power:") + detail::format_double(r_);
      case Kind::superexp:
        return "superexp";
      case Kind::geometric:
        return "geometric:" + detail::format_double(r_);
      case Kind::explicit_list:
        return "explicit[" + std::to_string(size_) + "]";
      case Kind::weight_driven:
        return "weight-driven(" + driver_->name() + ")";
    }
    return "?";
  }

 private:
  explicit Schedule(Kind k) : kind_(k) {}

  void set_list(std::vector<index_t> v) {
    size_ = v.size();
    list_ = std::make_shared<const std::vector<index_t>>(std::move(v));
  }

  [[nodiscard]] std::optional<index_t> power_value(index_t k) const {
    const index_t add = rounding_ == Rounding::floor_plus_one ? 1 : 0;
    if (r_ == std::floor(r_) && r_ <= 64.0) {
      const auto e = static_cast<int>(r_);
      index_t n = 1;
      for (int j = 0; j < e; ++j) {
        if (n > kScheduleCap / k) return std::nullopt;
        n *= k;
      }
      return n + add;
    }
    const long double y = std::pow(static_cast<long double>(k), static_cast<long double>(r_));
    if (y >= static_cast<long double>(kScheduleCap)) return std::nullopt;
    // Exact integer powers (e.g. 8^(4/3)) must not round down.
    const long double m = std::round(y);
    const long double fl = std::fabs(y - m) <= 1e-12L * std::max(1.0L, y) ? m : std::floor(y);
    return static_cast<index_t>(fl) + add;
  }

  Kind kind_;
  double r_ = 1.0;
  Rounding rounding_ = Rounding::floor_plus_one;
  index_t size_ = 0;
  std::shared_ptr<const std::vector<index_t>> list_;
  std::optional<WeightSeq> driver_;
};

/*!
  Power-log class, as a function of k, of n -> expr(n_k). Returns nullopt for
  schedules without a symbolic class (geometric, explicit, weight-driven).

  power(r):  (a,b,c) -> (r a, b, c), scale * r^b   (ln n_k ~ r ln k, lnln n_k ~ lnln k)
  superexp:  n_k^a = k^(a k);  ln n_k = k ln k;  lnln n_k ~ ln k
*/
[[nodiscard]] inline std::optional<WeightExpr> asymptotic_class(const WeightExpr& e, const Schedule& s) {
  if (e.superexp != 0.0) throw DomainError("cannot compose a super-exponential class with a schedule");
  switch (s.kind()) {
    case Schedule::Kind::power: {
      const double r = s.r();
      return WeightExpr{e.scale * std::pow(r, e.b), r * e.a, e.b, e.c, 0.0};
    }
    case Schedule::Kind::superexp:
      return WeightExpr{e.scale, e.b, e.b + e.c, 0.0, e.a};
    default:
      return std::nullopt;
  }
}

/*!
  Class of the forward difference f(k+1) - f(k) of a sequence of class `e`.
  nullopt when the difference is not eventually positive (decreasing or
  constant classes).
*/
[[nodiscard]] inline std::optional<WeightExpr> difference_class(const WeightExpr& e) {
  if (e.superexp > 0.0) {
    // f(k+1)/f(k) ~ e^s k^s: the difference is the next term.
    WeightExpr out = e;
    out.a += e.superexp;
    out.scale *= std::exp(e.superexp);
    return out;
  }
  if (e.superexp < 0.0) return std::nullopt;
  if (e.a > 0.0) return WeightExpr{e.scale * e.a, e.a - 1.0, e.b, e.c, 0.0};
  if (e.a < 0.0) return std::nullopt;
  if (e.b > 0.0) return WeightExpr{e.scale * e.b, -1.0, e.b - 1.0, e.c, 0.0};
  if (e.b < 0.0) return std::nullopt;
  if (e.c > 0.0) return WeightExpr{e.scale * e.c, -1.0, -1.0, e.c - 1.0, 0.0};
  return std::nullopt;
}

/*!
  The auxiliary sequence xi_k of (W2): the schedule's own gaps, an expression
  evaluated along the schedule, the increments of a weight along the
  schedule, or an explicit list.
*/
class GapSeq {
 public:
  enum class Kind { derived, of_schedule, increments, explicit_list };

  [[nodiscard]] static GapSeq derived() { return GapSeq(Kind::derived); }

  /// xi_k = e(n_k)
  [[nodiscard]] static GapSeq of_schedule(const WeightExpr& e) {
    GapSeq g(Kind::of_schedule);
    g.expr_ = e;
    return g;
  }

  /// xi_k = G_{n_{k+1}} - G_{n_k}
  [[nodiscard]] static GapSeq increments(const WeightSeq& G) {
    GapSeq g(Kind::increments);
    g.weight_ = G;
    return g;
  }

  [[nodiscard]] static GapSeq explicit_list(std::vector<double> v) {
    for (double x : v) {
      if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("gap entries must be positive and finite");
    }
    GapSeq g(Kind::explicit_list);
    g.list_ = std::make_shared<const std::vector<double>>(std::move(v));
    return g;
  }

  [[nodiscard]] Kind kind() const { return kind_; }

  /// Number of entries available along `s`.
  [[nodiscard]] index_t size(const Schedule& s) const {
    switch (kind_) {
      case Kind::derived:
      case Kind::increments:
        return s.size() == 0 ? 0 : s.size() - 1;
      case Kind::of_schedule:
        return s.size();
      case Kind::explicit_list:
        return std::min<index_t>(list_->size(), s.size());
    }
    return 0;
  }

  [[nodiscard]] double at(index_t k, const Schedule& s) const {
    switch (kind_) {
      case Kind::derived:
        return static_cast<double>(s.at(k + 1) - s.at(k));
      case Kind::of_schedule:
        return (*expr_)(static_cast<double>(s.at(k)));
      case Kind::increments:
        return weight_->value(s.at(k + 1)) - weight_->value(s.at(k));
      case Kind::explicit_list:
        if (k == 0 || k > list_->size()) throw DomainError("gap index outside explicit list");
        return (*list_)[static_cast<std::size_t>(k - 1)];
    }
    return 0.0;
  }

  /// Class of xi_k as a function of k, when symbolic.
  [[nodiscard]] std::optional<WeightExpr> asymptotic_class(const Schedule& s) const {
    switch (kind_) {
      case Kind::derived: {
        const auto nk = ergolab::asymptotic_class(WeightExpr::power(1.0), s);
        if (!nk) return std::nullopt;
        return difference_class(*nk);
      }
      case Kind::of_schedule:
        return ergolab::asymptotic_class(*expr_, s);
      case Kind::increments: {
        if (!weight_->asymptotic()) return std::nullopt;
        const auto gk = ergolab::asymptotic_class(*weight_->asymptotic(), s);
        if (!gk) return std::nullopt;
        return difference_class(*gk);
      }
      case Kind::explicit_list:
        return std::nullopt;
    }
    return std::nullopt;
  }

  [[nodiscard]] std::string describe() const {
    switch (kind_) {
      case Kind::derived:
        return "derived";
      case Kind::of_schedule:
        return "expr:" + to_string(*expr_);
      case Kind::increments:
        return "increments(" + weight_->name() + ")";
      case Kind::explicit_list:
        return "explicit[" + std::to_string(list_->size()) + "]";
    }
    return "?";
  }

 private:
  explicit GapSeq(Kind k) : kind_(k) {}

  Kind kind_;
  std::optional<WeightExpr> expr_;
  std::optional<WeightSeq> weight_;
  std::shared_ptr<const std::vector<double>> list_;
};

}  // namespace ergolab
