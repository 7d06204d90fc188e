#pragma once

#include <cmath>
#include <complex>

namespace ergolab {

/*!
  Compensated (Kahan-Babuska / Neumaier) accumulator.

  Partial sums run to 10^6 and beyond, where the tail terms that separate a
  converging series from a diverging one are far below the running sum's ulp.
  The accumulator carries the rounding error of every addition separately and
  folds it back in on read.
*/
template <typename Real>
class CompensatedSum {
 public:
  CompensatedSum() = default;
  explicit CompensatedSum(Real initial) : sum_(initial) {}

  void add(Real value) {
    const Real t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      compensation_ += (sum_ - t) + value;
    } else {
      compensation_ += (value - t) + sum_;
    }
    sum_ = t;
  }

  CompensatedSum& operator+=(Real value) {
    add(value);
    return *this;
  }

  [[nodiscard]] Real value() const { return sum_ + compensation_; }
  operator Real() const { return value(); }

 private:
  Real sum_ = Real{0};
  Real compensation_ = Real{0};
};

/// Compensated accumulation of complex values, component-wise.
template <typename Real>
class CompensatedComplexSum {
 public:
  void add(std::complex<Real> value) {
    re_.add(value.real());
    im_.add(value.imag());
  }

  CompensatedComplexSum& operator+=(std::complex<Real> value) {
    add(value);
    return *this;
  }

  [[nodiscard]] std::complex<Real> value() const { return {re_.value(), im_.value()}; }

 private:
  CompensatedSum<Real> re_;
  CompensatedSum<Real> im_;
};

using KahanSum = CompensatedSum<double>;
using KahanComplexSum = CompensatedComplexSum<double>;

}  // namespace ergolab
