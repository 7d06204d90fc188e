#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "ergolab/error.hpp"
#include "ergolab/random_stream.hpp"
#include "ergolab/schedule.hpp"
#include "ergolab/weight_expr.hpp"

namespace ergolab {

using cplx = std::complex<double>;

/// e^{2 pi i t}, with t reduced to [-1/2, 1/2) first.
[[nodiscard]] inline cplx cis_turns(double t) {
  t -= std::round(t);
  const double ang = 2.0 * std::numbers::pi * t;
  return {std::cos(ang), std::sin(ang)};
}

/// Fractional part of n * theta, accurate for n up to 2^64.
[[nodiscard]] inline double frac_mul(std::uint64_t n, double theta) {
  const auto frac_small = [](double m, double th) {
    const double p = m * th;
    const double err = std::fma(m, th, -p);
    const double f = (p - std::floor(p)) + err;
    return f - std::floor(f);
  };
  const double hi = static_cast<double>(n >> 32);
  const double lo = static_cast<double>(n & 0xFFFFFFFFULL);
  double f = frac_small(lo, theta);
  if (hi != 0.0) f += frac_small(hi, frac_small(4294967296.0, theta));
  return f - std::floor(f);
}

/*!
  A point of the unit circle, stored as a turn. Grid points j/M are kept as
  integers so that powers are exact.
*/
struct UnitPoint {
  std::uint64_t j = 0;
  std::uint64_t M = 0;  ///< 0 for a general turn
  double turns = 0.0;

  [[nodiscard]] static UnitPoint grid(std::uint64_t j, std::uint64_t M) {
    if (M == 0) throw DomainError("grid size must be positive");
    return UnitPoint{j % M, M, static_cast<double>(j % M) / static_cast<double>(M)};
  }

  [[nodiscard]] static UnitPoint from_turns(double t) {
    if (!std::isfinite(t)) throw DomainError("unit point needs a finite turn");
    return UnitPoint{0, 0, t - std::floor(t)};
  }

  [[nodiscard]] bool is_one() const { return M != 0 ? j == 0 : turns == 0.0; }

  /// Turn of lambda^n in [0,1).
  [[nodiscard]] double pow_turns(std::uint64_t n) const {
    if (M != 0) {
      const auto r = static_cast<std::uint64_t>((static_cast<unsigned __int128>(n) * j) % M);
      return static_cast<double>(r) / static_cast<double>(M);
    }
    return frac_mul(n, turns);
  }

  [[nodiscard]] cplx pow(std::uint64_t n) const { return cis_turns(pow_turns(n)); }
  [[nodiscard]] cplx value() const { return cis_turns(turns); }
};

/*!
  A bounded coefficient sequence {a_k}, k >= 1, optionally multiplied by a
  rotation lambda^{n_k} along the schedule.
*/
class ModulationSeq {
 public:
  enum class Kind { constant, twist, power, chirp, explicit_list, random };

  [[nodiscard]] static ModulationSeq constant(cplx c) {
    ModulationSeq m(Kind::constant);
    m.c_ = c;
    return m;
  }

  [[nodiscard]] static ModulationSeq zero() { return constant(0.0); }

  /// a_k = lambda^{n_k}
  [[nodiscard]] static ModulationSeq rotation(UnitPoint lambda) { return constant(1.0).rotated(lambda); }

  /// a_k = k^{i r}
  [[nodiscard]] static ModulationSeq twist(double r) {
    ModulationSeq m(Kind::twist);
    m.x_ = r;
    return m;
  }

  /// a_k = c k^e, e <= 0
  [[nodiscard]] static ModulationSeq power(cplx c, double e) {
    if (!(e <= 0.0)) throw DomainError("power modulation needs a nonpositive exponent to stay bounded");
    ModulationSeq m(Kind::power);
    m.c_ = c;
    m.x_ = e;
    return m;
  }

  /// a_k = e^{2 pi i k^2 phi}
  [[nodiscard]] static ModulationSeq chirp(double phi) {
    ModulationSeq m(Kind::chirp);
    m.x_ = phi;
    return m;
  }

  /// a_k = values[k-1]; zero past the end.
  [[nodiscard]] static ModulationSeq explicit_list(std::vector<cplx> values) {
    ModulationSeq m(Kind::explicit_list);
    m.list_ = std::make_shared<const std::vector<cplx>>(std::move(values));
    return m;
  }

  /// a_k = f_k(y) for a fixed sample y of a random stream.
  [[nodiscard]] static ModulationSeq random(RandomStream stream, std::uint64_t sample) {
    ModulationSeq m(Kind::random);
    m.stream_ = std::move(stream);
    m.sample_ = sample;
    return m;
  }

  /// The same sequence multiplied by lambda^{n_k}.
  [[nodiscard]] ModulationSeq rotated(UnitPoint lambda) const {
    ModulationSeq m = *this;
    if (m.rotation_) {
      if (m.rotation_->M != 0 && m.rotation_->M == lambda.M) {
        m.rotation_ = UnitPoint::grid(m.rotation_->j + lambda.j, lambda.M);
      } else {
        m.rotation_ = UnitPoint::from_turns(m.rotation_->turns + lambda.turns);
      }
    } else {
      m.rotation_ = lambda;
    }
    return m;
  }

  /// Same sequence with every value multiplied by s.
  [[nodiscard]] ModulationSeq scaled(cplx s) const {
    ModulationSeq m = *this;
    m.factor_ *= s;
    return m;
  }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] const std::optional<UnitPoint>& rotation_factor() const { return rotation_; }

  /// The coefficient a_k, without the rotation factor.
  [[nodiscard]] cplx base(index_t k) const {
    cplx v;
    switch (kind_) {
      case Kind::constant:
        v = c_;
        break;
      case Kind::twist: {
        const double ang = x_ * std::log(static_cast<double>(k));
        v = {std::cos(ang), std::sin(ang)};
        break;
      }
      case Kind::power:
        v = c_ * std::pow(static_cast<double>(k), x_);
        break;
      case Kind::chirp: {
        const auto k2 = static_cast<std::uint64_t>(static_cast<unsigned __int128>(k) * k);
        v = cis_turns(frac_mul(k2, x_));
        break;
      }
      case Kind::explicit_list:
        v = (k >= 1 && k <= list_->size()) ? (*list_)[static_cast<std::size_t>(k - 1)] : cplx{};
        break;
      case Kind::random:
        v = stream_(sample_, k);
        break;
    }
    return v * factor_;
  }

  /// a_k along the schedule (rotation factor evaluated at n_k).
  [[nodiscard]] cplx at(index_t k, const Schedule& s) const {
    const cplx v = base(k);
    if (!rotation_ || v == cplx{}) return v;
    return v * rotation_->pow(s.at(k));
  }

  [[nodiscard]] bool is_zero() const {
    if (factor_ == cplx{}) return true;
    switch (kind_) {
      case Kind::constant:
      case Kind::power:
        return c_ == cplx{};
      case Kind::explicit_list:
        for (const auto& v : *list_) {
          if (v != cplx{}) return false;
        }
        return true;
      case Kind::random:
        return stream_.law() == RandomStream::Law::zero;
      default:
        return false;
    }
  }

  /// ||{a_k}||_inf
  [[nodiscard]] double sup_bound() const {
    const double f = std::abs(factor_);
    switch (kind_) {
      case Kind::constant:
      case Kind::power:
        return f * std::abs(c_);
      case Kind::twist:
      case Kind::chirp:
        return f;
      case Kind::explicit_list: {
        double m = 0.0;
        for (const auto& v : *list_) m = std::max(m, std::abs(v));
        return f * m;
      }
      case Kind::random:
        return f * stream_.sup_bound();
    }
    return f;
  }

  /*!
    Class of |a_k - a_{k+1}| along n_k = k, when symbolic. A zero expression
    (scale 0) marks identically vanishing increments.
  */
  [[nodiscard]] std::optional<WeightExpr> increment_class() const {
    const double f = std::abs(factor_);
    if (is_zero()) return WeightExpr::constant(0.0);
    double rot = 0.0;  // |1 - lambda|
    if (rotation_ && !rotation_->is_one()) rot = std::abs(cplx(1.0) - rotation_->value());
    switch (kind_) {
      case Kind::constant:
        if (rot == 0.0) return WeightExpr::constant(0.0);
        return WeightExpr::constant(f * std::abs(c_) * rot);
      case Kind::twist:
        if (rot != 0.0) return WeightExpr::constant(f * rot);
        if (x_ == 0.0) return WeightExpr::constant(0.0);
        return WeightExpr::power(-1.0, f * std::abs(x_));
      case Kind::power:
        if (rot != 0.0) return WeightExpr::power(x_, f * std::abs(c_) * rot);
        if (x_ == 0.0) return WeightExpr::constant(0.0);
        return WeightExpr::power(x_ - 1.0, f * std::abs(c_) * std::abs(x_));
      default:
        return std::nullopt;
    }
  }

  [[nodiscard]] std::string describe() const {
    std::string out;
    switch (kind_) {
      case Kind::constant:
        out = "constant(" + detail::format_double(c_.real()) + "," + detail::format_double(c_.imag()) + ")";
        break;
      case Kind::twist:
        out = "twist(" + detail::format_double(x_) + ")";
        break;
      case Kind::power:
        out = "power(" + detail::format_double(std::abs(c_)) + "," + detail::format_double(x_) + ")";
        break;
      case Kind::chirp:
        out = "chirp(" + detail::format_double(x_) + ")";
        break;
      case Kind::explicit_list:
        out = "explicit[" + std::to_string(list_->size()) + "]";
        break;
      case Kind::random:
        out = "random(" + stream_.describe() + ", seed=" + std::to_string(stream_.seed()) +
              ", sample=" + std::to_string(sample_) + ")";
        break;
    }
    if (factor_ != cplx(1.0)) out += "*" + detail::format_double(std::abs(factor_));
    if (rotation_) out += "*rot(" + detail::format_double(rotation_->turns) + ")";
    return out;
  }

 private:
  explicit ModulationSeq(Kind k) : kind_(k) {}

  Kind kind_;
  cplx c_{1.0, 0.0};
  double x_ = 0.0;
  cplx factor_{1.0, 0.0};
  std::shared_ptr<const std::vector<cplx>> list_;
  RandomStream stream_;
  std::uint64_t sample_ = 0;
  std::optional<UnitPoint> rotation_;
};

}  // namespace ergolab
