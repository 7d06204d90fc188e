#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "ergolab/error.hpp"

namespace ergolab {

/// SplitMix64 finalizer.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based draw keyed by (seed, sample, index, lane).
[[nodiscard]] constexpr std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t sample, std::uint64_t k,
                                                   std::uint64_t lane) noexcept {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ sample);
  h = splitmix64(h ^ k);
  return splitmix64(h ^ lane);
}

/// Uniform in (0, 1].
[[nodiscard]] inline double to_unit_open0(std::uint64_t bits) noexcept {
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

/*!
  Independent symmetric sequence f_k(y) with a reproducible value for every
  (seed, sample y, index k): extending a run never perturbs earlier draws.
*/
class RandomStream {
 public:
  enum class Law { rademacher, gaussian, complex_gaussian, zero, deterministic };

  RandomStream() = default;
  RandomStream(Law law, std::uint64_t seed, bool antithetic = false) : law_(law), seed_(seed), sign_(antithetic ? -1.0 : 1.0) {
    if (law == Law::deterministic) throw DomainError("deterministic law needs explicit values");
  }

  /// Test double: f_k(y) = values[k-1] for every sample.
  [[nodiscard]] static RandomStream deterministic(std::vector<std::complex<double>> values) {
    RandomStream s;
    s.law_ = Law::deterministic;
    s.values_ = std::make_shared<const std::vector<std::complex<double>>>(std::move(values));
    return s;
  }

  [[nodiscard]] Law law() const { return law_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] bool antithetic() const { return sign_ < 0.0; }

  /// The seed-paired stream with every value negated.
  [[nodiscard]] RandomStream negated() const {
    RandomStream s = *this;
    s.sign_ = -sign_;
    return s;
  }

  /// Upper bound on |f_k(y)| (infinite for gaussian laws).
  [[nodiscard]] double sup_bound() const {
    switch (law_) {
      case Law::rademacher:
        return 1.0;
      case Law::zero:
        return 0.0;
      case Law::deterministic: {
        double m = 0.0;
        for (const auto& v : *values_) m = std::max(m, std::abs(v));
        return m;
      }
      default:
        return std::numeric_limits<double>::infinity();
    }
  }

  [[nodiscard]] std::complex<double> operator()(std::uint64_t sample, std::uint64_t k) const {
    switch (law_) {
      case Law::zero:
        return {0.0, 0.0};
      case Law::rademacher: {
        const std::uint64_t bits = counter_bits(seed_, sample, k, 0);
        return {sign_ * ((bits >> 63) != 0 ? 1.0 : -1.0), 0.0};
      }
      case Law::gaussian: {
        const double u1 = to_unit_open0(counter_bits(seed_, sample, k, 0));
        const double u2 = to_unit_open0(counter_bits(seed_, sample, k, 1));
        return {sign_ * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2), 0.0};
      }
      case Law::complex_gaussian: {
        const double u1 = to_unit_open0(counter_bits(seed_, sample, k, 0));
        const double u2 = to_unit_open0(counter_bits(seed_, sample, k, 1));
        const double r = sign_ * std::sqrt(-std::log(u1));
        const double ang = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(ang), r * std::sin(ang)};
      }
      case Law::deterministic:
        if (k == 0 || k > values_->size()) return {0.0, 0.0};
        return sign_ * (*values_)[static_cast<std::size_t>(k - 1)];
    }
    return {0.0, 0.0};
  }

  [[nodiscard]] std::string describe() const {
    switch (law_) {
      case Law::rademacher:
        return "rademacher";
      case Law::gaussian:
        return "gaussian";
      case Law::complex_gaussian:
        return "complex-gaussian";
      case Law::zero:
        return "zero";
      case Law::deterministic:
        return "deterministic";
    }
    return "?";
  }

 private:
  Law law_ = Law::zero;
  std::uint64_t seed_ = 0;
  double sign_ = 1.0;
  std::shared_ptr<const std::vector<std::complex<double>>> values_;
};

}  // namespace ergolab
