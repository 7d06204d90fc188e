#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ergolab/error.hpp"
#include "ergolab/modulation.hpp"
#include "ergolab/random_stream.hpp"
#include "ergolab/summation.hpp"

namespace ergolab {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Probability space discretized as a circle grid, Monte Carlo circle points, or m atoms.
class SampleSpace {
 public:
  enum class Kind { circle_grid, circle_points, finite };

  [[nodiscard]] static SampleSpace circle_grid(std::size_t M) {
    if (M < 2) throw DomainError("circle grid needs M >= 2");
    SampleSpace s(Kind::circle_grid);
    s.size_ = M;
    return s;
  }

  /// `count` uniform points on [0,1), reproducible from the seed.
  [[nodiscard]] static SampleSpace circle_points(std::size_t count, std::uint64_t seed) {
    if (count < 1) throw DomainError("Monte Carlo space needs at least one point");
    SampleSpace s(Kind::circle_points);
    s.size_ = count;
    auto pts = std::make_shared<std::vector<double>>(count);
    for (std::size_t i = 0; i < count; ++i) {
      (*pts)[i] = static_cast<double>(counter_bits(seed, 0x5eed, i, 7) >> 11) * 0x1.0p-53;
    }
    s.points_ = pts;
    s.seed_ = seed;
    return s;
  }

  [[nodiscard]] static SampleSpace finite(std::size_t m) {
    if (m < 1) throw DomainError("finite space needs m >= 1");
    SampleSpace s(Kind::finite);
    s.size_ = m;
    return s;
  }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] double weight() const { return 1.0 / static_cast<double>(size_); }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }

  /// Location in turns of point i (circle kinds only).
  [[nodiscard]] double turn(std::size_t i) const {
    switch (kind_) {
      case Kind::circle_grid:
        return static_cast<double>(i) / static_cast<double>(size_);
      case Kind::circle_points:
        return (*points_)[i];
      case Kind::finite:
        break;
    }
    throw DomainError("finite spaces have no circle coordinate");
  }

  friend bool operator==(const SampleSpace& a, const SampleSpace& b) {
    return a.kind_ == b.kind_ && a.size_ == b.size_ && a.seed_ == b.seed_;
  }

 private:
  explicit SampleSpace(Kind k) : kind_(k) {}
  Kind kind_;
  std::size_t size_ = 0;
  std::uint64_t seed_ = 0;
  std::shared_ptr<const std::vector<double>> points_;
};

/// Values of a field on the points of a space: one row per point, one column per component of C^d.
struct VectorField {
  SampleSpace space = SampleSpace::finite(1);
  Matrix values;

  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(values.cols()); }

  [[nodiscard]] static VectorField zero(const SampleSpace& s, std::size_t d) {
    return VectorField{s, Matrix::Zero(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(d))};
  }

  /// L_p(mu, C^d) norm with the Euclidean norm on C^d.
  [[nodiscard]] double norm(double p = 2.0) const {
    const double w = space.weight();
    if (std::isinf(p)) {
      double m = 0.0;
      for (Eigen::Index i = 0; i < values.rows(); ++i) m = std::max(m, values.row(i).norm());
      return m;
    }
    // Compensated mean keeps the result independent of accidental reorderings.
    KahanSum acc;
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      const double r = values.row(i).norm();
      acc.add(p == 2.0 ? r * r : std::pow(r, p));
    }
    const double mean = acc.value() * w;
    return p == 2.0 ? std::sqrt(mean) : std::pow(mean, 1.0 / p);
  }

  VectorField& operator+=(const VectorField& o) {
    values += o.values;
    return *this;
  }
};

/// Gaussian field with i.i.d. complex entries, reproducible from the seed.
[[nodiscard]] inline VectorField random_field(const SampleSpace& s, std::size_t d, std::uint64_t seed) {
  const RandomStream g(RandomStream::Law::complex_gaussian, seed);
  VectorField f = VectorField::zero(s, d);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      f.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = g(i, c);
    }
  }
  return f;
}

/// Finite trigonometric polynomial sum_m c_m e^{2 pi i m x} with c_m in C^d.
struct TrigField {
  std::map<std::int64_t, Vector> coeffs;
  std::size_t d = 1;

  [[nodiscard]] Vector at(double x) const {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(d));
    for (const auto& [m, c] : coeffs) {
      v += c * cis_turns(frac_mul(static_cast<std::uint64_t>(m < 0 ? -m : m), x) * (m < 0 ? -1.0 : 1.0));
    }
    return v;
  }

  [[nodiscard]] VectorField sample(const SampleSpace& s) const {
    VectorField f = VectorField::zero(s, d);
    for (std::size_t i = 0; i < s.size(); ++i) f.values.row(static_cast<Eigen::Index>(i)) = at(s.turn(i)).transpose();
    return f;
  }

  /// Koopman image under x -> x + theta: c_m -> c_m e^{2 pi i m theta}.
  [[nodiscard]] TrigField rotated(double theta) const {
    TrigField out = *this;
    for (auto& [m, c] : out.coeffs) c *= cis_turns(frac_mul(static_cast<std::uint64_t>(m < 0 ? -m : m), theta) * (m < 0 ? -1.0 : 1.0));
    return out;
  }
};

/// A measure-preserving map of a sample space.
class Transformation {
 public:
  enum class Kind { rotation, doubling, permutation };

  /// x -> x + j/M on the grid of M points (exact index shift).
  [[nodiscard]] static Transformation rotation_grid(std::uint64_t j, std::size_t M) {
    Transformation t(Kind::rotation, SampleSpace::circle_grid(M));
    t.theta_ = UnitPoint::grid(j, M);
    return t;
  }

  /// x -> x + theta on Monte Carlo points (each orbit computed exactly).
  [[nodiscard]] static Transformation rotation_points(double theta, const SampleSpace& s) {
    if (s.kind() != SampleSpace::Kind::circle_points) {
      throw DomainError("a rotation by an arbitrary angle needs a Monte Carlo point space; grids need theta = j/M");
    }
    Transformation t(Kind::rotation, s);
    t.theta_ = UnitPoint::from_turns(theta);
    return t;
  }

  /// x -> 2x mod 1 on a grid of M = 2^m points.
  [[nodiscard]] static Transformation doubling(std::size_t M) {
    if (M < 2 || (M & (M - 1)) != 0) throw DomainError("doubling map needs a grid of 2^m points");
    return Transformation(Kind::doubling, SampleSpace::circle_grid(M));
  }

  /// i -> pi[i] on m atoms (0-based).
  [[nodiscard]] static Transformation permutation(std::vector<std::size_t> pi) {
    std::vector<bool> seen(pi.size(), false);
    for (std::size_t v : pi) {
      if (v >= pi.size() || seen[v]) throw DomainError("not a permutation");
      seen[v] = true;
    }
    Transformation t(Kind::permutation, SampleSpace::finite(pi.size()));
    t.pi_ = std::make_shared<const std::vector<std::size_t>>(std::move(pi));
    return t;
  }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] const SampleSpace& space() const { return space_; }
  [[nodiscard]] const UnitPoint& theta() const { return theta_; }
  [[nodiscard]] bool index_exact() const { return space_.kind() != SampleSpace::Kind::circle_points; }

  /// tau^n(i) on index spaces.
  [[nodiscard]] std::size_t map_index(std::size_t i, std::uint64_t n = 1) const {
    const std::size_t M = space_.size();
    switch (kind_) {
      case Kind::rotation: {
        if (!index_exact()) break;
        const auto shift = static_cast<std::uint64_t>((static_cast<unsigned __int128>(n) * theta_.j) % M);
        return static_cast<std::size_t>((i + shift) % M);
      }
      case Kind::doubling: {
        // 2^n mod M by repeated squaring.
        std::uint64_t base = 2 % M, acc = 1 % M, e = n;
        while (e) {
          if (e & 1) acc = static_cast<std::uint64_t>((static_cast<unsigned __int128>(acc) * base) % M);
          base = static_cast<std::uint64_t>((static_cast<unsigned __int128>(base) * base) % M);
          e >>= 1;
        }
        return static_cast<std::size_t>((static_cast<unsigned __int128>(i) * acc) % M);
      }
      case Kind::permutation: {
        const std::vector<std::size_t>& pi = *pi_;
        if (n <= 64) {
          for (std::uint64_t s = 0; s < n; ++s) i = pi[i];
          return i;
        }
        // Walk the cycle of i once and index it.
        std::vector<std::size_t> cycle{i};
        for (std::size_t j = pi[i]; j != i; j = pi[j]) cycle.push_back(j);
        return cycle[static_cast<std::size_t>(n % cycle.size())];
      }
    }
    throw DomainError("index dynamics undefined for Monte Carlo points");
  }

  /// tau^n(x) in turns (circle rotations).
  [[nodiscard]] double map_turn(double x, std::uint64_t n = 1) const {
    if (kind_ != Kind::rotation) throw DomainError("turn dynamics only for rotations");
    const double y = x + theta_.pow_turns(n);
    return y - std::floor(y);
  }

  /*!
    Pushforward check of the uniform weights. Permutations and grid
    rotations must be bijections; the doubling map is checked one dyadic
    level down (each cell of 2 grid points has preimage measure 2/M).
  */
  [[nodiscard]] bool preserves_measure() const {
    const std::size_t M = space_.size();
    if (!index_exact()) return true;  // each point carries its own exact orbit
    std::vector<std::size_t> count(M, 0);
    for (std::size_t i = 0; i < M; ++i) ++count[map_index(i)];
    if (kind_ != Kind::doubling) {
      for (std::size_t c : count) {
        if (c != 1) return false;
      }
      return true;
    }
    for (std::size_t cell = 0; cell < M / 2; ++cell) {
      if (count[2 * cell] + count[2 * cell + 1] != 2) return false;
    }
    return true;
  }

 private:
  Transformation(Kind k, SampleSpace s) : kind_(k), space_(std::move(s)) {}

  Kind kind_;
  SampleSpace space_;
  UnitPoint theta_{};
  std::shared_ptr<const std::vector<std::size_t>> pi_;
};

/*!
  Spectral norm by power iteration on A^* A. The Gram matrix is first
  squared repeatedly (with normalization) to separate the dominant
  direction, then refined with ordinary iterations from a fixed start.
  A is scaled to unit max entry first so tiny powers do not underflow.
*/
[[nodiscard]] inline double operator_norm(const Matrix& A_in) {
  if (A_in.size() == 0) return 0.0;
  const double amax = A_in.cwiseAbs().maxCoeff();
  if (amax == 0.0) return 0.0;
  if (amax != 1.0) return amax * operator_norm(A_in / amax);
  const Matrix& A = A_in;
  const Matrix B = A.adjoint() * A;
  const double scale = B.norm();
  if (scale == 0.0) return 0.0;
  Matrix P = B / scale;
  for (int s = 0; s < 12; ++s) {
    P = P * P;
    const double nrm = P.norm();
    if (nrm == 0.0) break;
    P /= nrm;
  }
  // Largest column of the squared Gram matrix as start vector.
  Eigen::Index best = 0;
  double best_norm = -1.0;
  for (Eigen::Index j = 0; j < P.cols(); ++j) {
    const double nj = P.col(j).norm();
    if (nj > best_norm) {
      best_norm = nj;
      best = j;
    }
  }
  Vector v = best_norm > 0.0 ? Vector(P.col(best)) : Vector::Ones(B.cols());
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    Vector w = B * v;
    const double next = std::real(v.dot(w));
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    v = w / wn;
    if (it > 3 && std::abs(next - lambda) <= 1e-15 * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return std::sqrt(std::max(0.0, lambda));
}

/// Binary ladder A, A^2, A^4, ... built on demand; powers multiply set bits in ascending order.
class PowerCache {
 public:
  PowerCache() = default;
  explicit PowerCache(Matrix A) : st_(std::make_shared<State>()) { st_->ladder.push_back(std::move(A)); }

  [[nodiscard]] Matrix power(std::uint64_t n) const {
    const Eigen::Index d = st_->ladder.front().rows();
    Matrix out = Matrix::Identity(d, d);
    unsigned bit = 0;
    bool first = true;
    while (n) {
      if (n & 1) {
        const Matrix& f = level(bit);
        if (first) {
          out = f;
          first = false;
        } else {
          out = out * f;
        }
      }
      n >>= 1;
      ++bit;
    }
    return out;
  }

 private:
  struct State {
    std::mutex m;
    std::vector<Matrix> ladder;
  };

  const Matrix& level(unsigned bit) const {
    std::lock_guard<std::mutex> lock(st_->m);
    while (st_->ladder.size() <= bit) st_->ladder.push_back(st_->ladder.back() * st_->ladder.back());
    return st_->ladder[bit];
  }

  std::shared_ptr<State> st_;
};

/*!
  Operator cocycle over a base map: omega -> T_omega. Fibers are one matrix
  per atom (finite spaces) or a step function over P equal pieces of [0,1).
*/
class Cocycle {
 public:
  Cocycle(Transformation base, std::vector<Matrix> fibers) : base_(std::move(base)), fibers_(std::move(fibers)) {
    if (fibers_.empty()) throw DomainError("cocycle needs at least one fiber");
    const Eigen::Index d = fibers_.front().rows();
    for (const auto& F : fibers_) {
      if (F.rows() != d || F.cols() != d) throw DomainError("cocycle fibers must share one square dimension");
      if (operator_norm(F) > 1.0 + 1e-12) throw DomainError("cocycle fibers must be contractions");
    }
    if (base_.space().kind() == SampleSpace::Kind::finite && fibers_.size() != base_.space().size()) {
      throw DomainError("finite cocycle needs one fiber per atom");
    }
  }

  /// Every fiber equal to T.
  [[nodiscard]] static Cocycle constant(Transformation base, const Matrix& T) {
    const std::size_t count = base.space().kind() == SampleSpace::Kind::finite ? base.space().size() : 1;
    return Cocycle(std::move(base), std::vector<Matrix>(count, T));
  }

  [[nodiscard]] const Transformation& base() const { return base_; }
  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(fibers_.front().rows()); }
  [[nodiscard]] bool is_constant() const {
    for (const auto& F : fibers_) {
      if (F != fibers_.front()) return false;
    }
    return true;
  }

  [[nodiscard]] const Matrix& fiber_at_index(std::size_t i) const {
    const SampleSpace& s = base_.space();
    if (i >= s.size()) throw DomainError("point outside the sample space");
    if (s.kind() == SampleSpace::Kind::finite) return fibers_[i];
    return fiber_at_turn(s.turn(i));
  }

  [[nodiscard]] const Matrix& fiber_at_turn(double x) const {
    if (base_.space().kind() == SampleSpace::Kind::finite) throw DomainError("finite cocycle has no turn coordinate");
    auto piece = static_cast<std::size_t>(std::floor(x * static_cast<double>(fibers_.size())));
    if (piece >= fibers_.size()) piece = fibers_.size() - 1;
    return fibers_[piece];
  }

 private:
  Transformation base_;
  std::vector<Matrix> fibers_;
};

/// T_omega T_{alpha omega} ... T_{alpha^{n-1} omega}, leftmost factor T_omega.
[[nodiscard]] inline Matrix cocycle_product(const Cocycle& C, std::size_t omega, std::uint64_t n) {
  const Eigen::Index d = static_cast<Eigen::Index>(C.dim());
  if (omega >= C.base().space().size()) throw DomainError("point outside the sample space");
  Matrix out = Matrix::Identity(d, d);
  std::size_t w = omega;
  for (std::uint64_t j = 0; j < n; ++j) {
    out = out * C.fiber_at_index(w);
    w = C.base().map_index(w);
  }
  return out;
}

/// Same product along the exact orbit of a circle point given in turns.
[[nodiscard]] inline Matrix cocycle_product_turn(const Cocycle& C, double x, std::uint64_t n) {
  const Eigen::Index d = static_cast<Eigen::Index>(C.dim());
  Matrix out = Matrix::Identity(d, d);
  for (std::uint64_t j = 0; j < n; ++j) out = out * C.fiber_at_turn(C.base().map_turn(x, j));
  return out;
}

/// Operator on vector fields: Koopman, pointwise matrix, Markov, or cocycle skew product.
class LinearOperator {
 public:
  enum class Kind { koopman, matrix, markov, skew };

  [[nodiscard]] static LinearOperator koopman(Transformation t) {
    if (!t.index_exact()) throw DomainError("grid Koopman operators need an index-exact transformation");
    LinearOperator op(Kind::koopman, t.space());
    op.contraction_ = true;
    op.power_bound_ = 1.0;
    op.dunford_schwartz_ = t.kind() != Transformation::Kind::doubling;
    op.map_ = std::move(t);
    return op;
  }

  /// Pointwise action f(x) -> A f(x) on C^d-valued fields over `space`.
  [[nodiscard]] static LinearOperator matrix(Matrix A, SampleSpace space = SampleSpace::finite(1),
                                             std::uint64_t audit_horizon = 256) {
    if (A.rows() != A.cols()) throw DomainError("matrix operator must be square");
    LinearOperator op(Kind::matrix, std::move(space));
    op.norm_ = operator_norm(A);
    op.contraction_ = op.norm_ <= 1.0 + 1e-12;
    op.cache_ = PowerCache(A);
    // Power-bounded when the audited sup is already reached in the first half of the horizon.
    double m = 1.0, m_half = 1.0;
    for (std::uint64_t n = 1; n <= audit_horizon; ++n) {
      m = std::max(m, operator_norm(op.cache_.power(n)));
      if (2 * n <= audit_horizon) m_half = m;
    }
    op.power_bound_ = m;
    op.power_bounded_ = m <= m_half * (1.0 + 1e-9);
    op.audit_horizon_ = audit_horizon;
    op.A_ = std::move(A);
    return op;
  }

  /// (P f)(i) = sum_j P_ij f(j) on a finite space.
  [[nodiscard]] static LinearOperator markov(Matrix P) {
    if (P.rows() != P.cols()) throw DomainError("markov operator must be square");
    const Eigen::Index m = P.rows();
    bool row_stochastic = true, doubly = true;
    for (Eigen::Index i = 0; i < m; ++i) {
      double rs = 0.0, cs = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (std::abs(P(i, j).imag()) > 0.0 || P(i, j).real() < 0.0) throw DomainError("markov entries must be nonnegative reals");
        rs += P(i, j).real();
        cs += P(j, i).real();
      }
      row_stochastic = row_stochastic && std::abs(rs - 1.0) <= 1e-12;
      doubly = doubly && std::abs(rs - 1.0) <= 1e-12 && std::abs(cs - 1.0) <= 1e-12;
    }
    if (!row_stochastic) throw DomainError("markov matrix rows must sum to 1");
    LinearOperator op(Kind::markov, SampleSpace::finite(static_cast<std::size_t>(m)));
    op.dunford_schwartz_ = doubly;
    op.contraction_ = doubly;  // doubly stochastic => contraction on every L_p
    op.power_bound_ = doubly ? 1.0 : std::numeric_limits<double>::infinity();
    op.power_bounded_ = true;  // powers stay stochastic: sup norm 1
    op.cache_ = PowerCache(P);
    op.A_ = std::move(P);
    return op;
  }

  /// (T f)(omega) = T_omega f(alpha omega).
  [[nodiscard]] static LinearOperator skew(Cocycle C) {
    if (!C.base().index_exact()) throw DomainError("skew operators act on index spaces");
    LinearOperator op(Kind::skew, C.base().space());
    op.power_bound_ = 1.0;
    op.cocycle_ = std::make_shared<const Cocycle>(std::move(C));
    // ||T f||_2 <= ||f||_2 holds for measure-preserving bases; re-verified on 10 fields.
    op.contraction_ = true;
    for (std::uint64_t s = 0; s < 10 && op.contraction_; ++s) {
      const VectorField f = random_field(op.space_, op.cocycle_->dim(), 0xC0C0 + s);
      op.contraction_ = op.apply(f).norm() <= f.norm() * (1.0 + 1e-10);
    }
    if (!op.contraction_) op.power_bound_ = std::numeric_limits<double>::infinity();
    return op;
  }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] const SampleSpace& space() const { return space_; }
  [[nodiscard]] bool is_contraction() const { return contraction_; }
  [[nodiscard]] bool is_dunford_schwartz() const { return dunford_schwartz_; }
  /// sup_{n <= horizon} ||A^n|| (finite audit, not a proof).
  [[nodiscard]] double power_bound() const { return power_bound_; }
  [[nodiscard]] std::uint64_t audit_horizon() const { return audit_horizon_; }
  [[nodiscard]] bool is_power_bounded(double M) const { return power_bound_ <= M; }
  /// Power-bounded flag: contraction, stochastic, or no growth over the second half of the audit.
  [[nodiscard]] bool power_bounded() const { return contraction_ || power_bounded_; }
  [[nodiscard]] const Matrix& matrix_data() const { return A_; }
  [[nodiscard]] double norm() const { return norm_; }
  /// Dimension d of the C^d-valued fields the operator acts on.
  [[nodiscard]] std::size_t field_dim() const {
    if (kind_ == Kind::matrix) return static_cast<std::size_t>(A_.rows());
    if (kind_ == Kind::skew) return cocycle_->dim();
    return 1;
  }

  [[nodiscard]] VectorField apply(const VectorField& f) const { return apply_power(1, f); }

  /// T^n f.
  [[nodiscard]] VectorField apply_power(std::uint64_t n, const VectorField& f) const {
    check_domain(f);
    if (n == 0) return f;
    switch (kind_) {
      case Kind::koopman: {
        VectorField out = VectorField::zero(f.space, f.dim());
        for (std::size_t i = 0; i < f.space.size(); ++i) {
          out.values.row(static_cast<Eigen::Index>(i)) = f.values.row(static_cast<Eigen::Index>(map_->map_index(i, n)));
        }
        return out;
      }
      case Kind::matrix: {
        if (f.values.cols() != A_.rows()) throw DomainError("field dimension does not match the matrix");
        return VectorField{f.space, f.values * cache_.power(n).transpose()};
      }
      case Kind::markov:
        return VectorField{f.space, cache_.power(n) * f.values};
      case Kind::skew: {
        if (f.values.cols() != static_cast<Eigen::Index>(cocycle_->dim())) {
          throw DomainError("field dimension does not match the cocycle");
        }
        VectorField out = VectorField::zero(f.space, f.dim());
        for (std::size_t w = 0; w < f.space.size(); ++w) {
          const std::size_t target = cocycle_->base().map_index(w, n);
          const Vector v = f.values.row(static_cast<Eigen::Index>(target)).transpose();
          out.values.row(static_cast<Eigen::Index>(w)) = (cocycle_product(*cocycle_, w, n) * v).transpose();
        }
        return out;
      }
    }
    return f;
  }

 private:
  LinearOperator(Kind k, SampleSpace s) : kind_(k), space_(std::move(s)) {}

  void check_domain(const VectorField& f) const {
    if (kind_ == Kind::matrix) return;  // pointwise: any space
    if (!(f.space == space_)) throw DomainError("field lives on a different sample space");
  }

  Kind kind_;
  SampleSpace space_;
  bool contraction_ = false;
  bool dunford_schwartz_ = false;
  double power_bound_ = std::numeric_limits<double>::infinity();
  bool power_bounded_ = false;
  std::uint64_t audit_horizon_ = 0;
  double norm_ = 0.0;
  std::optional<Transformation> map_;
  Matrix A_;
  PowerCache cache_;
  std::shared_ptr<const Cocycle> cocycle_;
};

/// Koopman operator of the base map (the skew operator of an identity cocycle).
[[nodiscard]] inline LinearOperator skew_operator(const Cocycle& C) { return LinearOperator::skew(C); }

/// Random contraction Q diag(s) V^* with singular values in [lo, 1] and largest exactly 1.
[[nodiscard]] inline Matrix random_contraction(std::size_t d, std::uint64_t seed, double lo = 0.5) {
  const RandomStream g(RandomStream::Law::complex_gaussian, seed);
  const auto D = static_cast<Eigen::Index>(d);
  Matrix X(D, D), Y(D, D);
  for (Eigen::Index i = 0; i < D; ++i) {
    for (Eigen::Index j = 0; j < D; ++j) {
      X(i, j) = g(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j));
      Y(i, j) = g(static_cast<std::uint64_t>(i) + 1000, static_cast<std::uint64_t>(j));
    }
  }
  const Matrix Q = Eigen::HouseholderQR<Matrix>(X).householderQ();
  const Matrix V = Eigen::HouseholderQR<Matrix>(Y).householderQ();
  Eigen::VectorXd s(D);
  for (Eigen::Index i = 0; i < D; ++i) {
    s(i) = i == 0 ? 1.0 : lo + (1.0 - lo) * to_unit_open0(counter_bits(seed, 77, static_cast<std::uint64_t>(i), 0));
  }
  return Q * s.cast<cplx>().asDiagonal() * V.adjoint();
}

/// Doubly stochastic m x m matrix as a convex mix of `terms` random permutation matrices.
[[nodiscard]] inline Matrix random_doubly_stochastic(std::size_t m, std::uint64_t seed, std::size_t terms = 4) {
  const auto M = static_cast<Eigen::Index>(m);
  Matrix P = Matrix::Zero(M, M);
  std::vector<double> w(terms);
  double total = 0.0;
  for (std::size_t t = 0; t < terms; ++t) {
    w[t] = to_unit_open0(counter_bits(seed, 11, t, 0)) + 0.1;
    total += w[t];
  }
  for (std::size_t t = 0; t < terms; ++t) {
    std::vector<std::size_t> pi(m);
    std::iota(pi.begin(), pi.end(), std::size_t{0});
    for (std::size_t i = m; i > 1; --i) {
      const auto j = static_cast<std::size_t>(counter_bits(seed, 12 + t, i, 0) % i);
      std::swap(pi[i - 1], pi[j]);
    }
    for (std::size_t i = 0; i < m; ++i) P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(pi[i])) += w[t] / total;
  }
  // Exact unit row/column sums up to rounding of the weights.
  return P;
}

namespace detail {

inline Matrix matrix_from_json(const nlohmann::json& rows) {
  if (!rows.is_array() || rows.empty()) throw DomainError("matrix must be a non-empty array of rows");
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix A(n, static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != A.cols()) throw DomainError("ragged matrix rows");
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      const auto& e = row[static_cast<std::size_t>(j)];
      A(i, j) = e.is_array() ? cplx(e.at(0).get<double>(), e.at(1).get<double>()) : cplx(e.get<double>(), 0.0);
    }
  }
  return A;
}

inline SampleSpace space_from_json(const nlohmann::json& j) {
  const std::string kind = j.value("kind", "circle");
  if (kind == "finite") return SampleSpace::finite(j.at("m").get<std::size_t>());
  if (kind == "circle" || kind == "circle_grid") return SampleSpace::circle_grid(j.value("M", std::size_t{256}));
  if (kind == "circle_points") return SampleSpace::circle_points(j.value("M", std::size_t{256}), j.value("seed", std::uint64_t{0}));
  throw DomainError("unknown sample space kind '" + kind + "'");
}

/// Base map from {kind: rotation|doubling|permutation, theta|pi, space}; `space` is the fallback.
inline Transformation transformation_from_json(const nlohmann::json& b, const SampleSpace& fallback) {
  const std::string bk = b.value("kind", std::string("rotation"));
  const SampleSpace bs = b.contains("space") ? space_from_json(b.at("space")) : fallback;
  if (bk == "rotation" || bk == "skew") {
    if (bs.kind() == SampleSpace::Kind::circle_points) return Transformation::rotation_points(b.at("theta").get<double>(), bs);
    const double theta = b.value("theta", 0.0);
    const double jm = theta * static_cast<double>(bs.size());
    if (std::abs(jm - std::round(jm)) > 1e-9) throw DomainError("grid rotations need theta = j/M");
    const auto jj = static_cast<std::int64_t>(std::llround(jm));
    const auto M = static_cast<std::int64_t>(bs.size());
    return Transformation::rotation_grid(static_cast<std::uint64_t>(((jj % M) + M) % M), bs.size());
  }
  if (bk == "doubling") return Transformation::doubling(bs.size());
  if (bk == "permutation") return Transformation::permutation(b.at("pi").get<std::vector<std::size_t>>());
  throw DomainError("unknown transformation kind '" + bk + "'");
}

}  // namespace detail

/*!
  Cocycle from {base, fibers | matrix | d, seed}: explicit fibers, one
  constant fiber, or seeded random contractions (one per atom of a finite
  base, one otherwise).
*/
[[nodiscard]] inline Cocycle cocycle_from_json(const nlohmann::json& j) {
  const auto seed = j.value("seed", std::uint64_t{1});
  const SampleSpace space = j.contains("space") ? detail::space_from_json(j.at("space")) : SampleSpace::circle_grid(256);
  const nlohmann::json b = j.contains("base")                    ? j.at("base")
                           : j.value("kind", std::string("skew")) == "skew" ? j
                                                                          : nlohmann::json{{"kind", "rotation"}};
  Transformation base = detail::transformation_from_json(b, space);
  if (j.contains("fibers")) {
    std::vector<Matrix> fibers;
    for (const auto& f : j.at("fibers")) fibers.push_back(detail::matrix_from_json(f));
    return Cocycle(std::move(base), std::move(fibers));
  }
  if (j.contains("matrix")) return Cocycle::constant(std::move(base), detail::matrix_from_json(j.at("matrix")));
  const auto d = j.value("d", std::size_t{4});
  if (j.value("constant", false)) return Cocycle::constant(std::move(base), random_contraction(d, seed));
  std::vector<Matrix> fibers;
  const std::size_t count = base.space().kind() == SampleSpace::Kind::finite ? base.space().size() : 1;
  for (std::size_t i = 0; i < count; ++i) fibers.push_back(random_contraction(d, seed + i));
  return Cocycle(std::move(base), std::move(fibers));
}

/*!
  Operator from {kind, theta|matrix|pi|fibers, space:{kind, m|M}, seed, d}.
  Kinds: rotation (theta = j/M on the grid), doubling, permutation,
  matrix, markov, skew (base + fibers). A missing matrix is drawn from
  the seed (random contraction / random doubly stochastic).
*/
[[nodiscard]] inline LinearOperator operator_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const auto seed = j.value("seed", std::uint64_t{1});
  const SampleSpace space = j.contains("space") ? detail::space_from_json(j.at("space")) : SampleSpace::circle_grid(256);
  const auto base_map = [&] { return detail::transformation_from_json(j.contains("base") ? j.at("base") : j, space); };
  if (kind == "rotation" || kind == "doubling" || kind == "permutation") return LinearOperator::koopman(base_map());
  if (kind == "matrix") {
    Matrix A = j.contains("matrix") ? detail::matrix_from_json(j.at("matrix"))
                                    : random_contraction(j.value("d", std::size_t{4}), seed);
    return LinearOperator::matrix(std::move(A), space);
  }
  if (kind == "markov") {
    Matrix P = j.contains("matrix") ? detail::matrix_from_json(j.at("matrix"))
                                    : random_doubly_stochastic(j.value("m", std::size_t{8}), seed);
    return LinearOperator::markov(std::move(P));
  }
  if (kind == "skew") return LinearOperator::skew(cocycle_from_json(j));
  throw DomainError("unknown operator kind '" + kind + "'");
}

}  // namespace ergolab
