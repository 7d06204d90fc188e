#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "ergolab/admissibility.hpp"
#include "ergolab/bertrand.hpp"
#include "ergolab/modulation.hpp"
#include "ergolab/operators.hpp"
#include "ergolab/parallel.hpp"
#include "ergolab/schedule.hpp"
#include "ergolab/summation.hpp"
#include "ergolab/weight.hpp"

namespace ergolab {

/// f_k for k >= 1.
using FieldSeq = std::function<VectorField(index_t)>;

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// out[j] = sum_m in[m] e^{+2 pi i j m / M}.
inline std::vector<cplx> backward_dft(std::vector<cplx> in) {
  const int M = static_cast<int>(in.size());
  std::vector<cplx> out(in.size());
  auto* pin = reinterpret_cast<fftw_complex*>(in.data());
  auto* pout = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_dft_1d(M, pin, pout, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

/// Golden-section maximization of f on [lo, hi].
template <typename F>
std::pair<double, double> golden_max(F&& f, double lo, double hi, int iterations = 80) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iterations; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    }
  }
  return f1 >= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

}  // namespace detail

/// Running S_n = f_1 + ... + f_n.
class PrefixSum {
 public:
  void push(const VectorField& f) {
    if (n_ == 0) {
      S_ = f;
    } else {
      S_.values += f.values;
    }
    ++n_;
  }
  [[nodiscard]] index_t count() const { return n_; }
  [[nodiscard]] const VectorField& sum() const { return S_; }

 private:
  index_t n_ = 0;
  VectorField S_;
};

/// (1/W_n) sum_{k=1}^n f_k.
[[nodiscard]] inline VectorField weighted_average(const FieldSeq& f, const WeightSeq& W, index_t n) {
  if (n < 1) throw DomainError("weighted average needs n >= 1");
  const double w = W.eval(n);
  PrefixSum S;
  for (index_t k = 1; k <= n; ++k) S.push(f(k));
  VectorField out = S.sum();
  out.values /= w;
  return out;
}

/*!
  sum_{k=n0}^n f_k/W_k computed directly and through summation by parts,
  S_n/W_n + sum_{k=n0}^{n-1} (1/W_k - 1/W_{k+1}) S_k with S_k = sum_{j=n0}^k f_j.
*/
[[nodiscard]] inline std::pair<VectorField, VectorField> weighted_series(const FieldSeq& f, const WeightSeq& W,
                                                                         index_t n) {
  const index_t n0 = W.n0();
  if (n < n0) throw DomainError("weighted series needs n >= n0");
  VectorField direct = f(n0);
  direct.values.setZero();
  VectorField abel = direct;
  VectorField S = direct;
  for (index_t k = n0; k <= n; ++k) {
    const VectorField fk = f(k);
    const double wk = W.eval(k);
    direct.values += fk.values / wk;
    S.values += fk.values;
    if (k < n) abel.values += S.values * (W.one_minus_ratio(k) / wk);
  }
  abel.values += S.values / W.eval(n);
  return {direct, abel};
}

/// psi_n(lambda) = sum_{k<=n} a_k lambda^{n_k}.
[[nodiscard]] inline cplx modulated_poly(const ModulationSeq& a, const Schedule& s, index_t n, const UnitPoint& lambda) {
  KahanComplexSum acc;
  for (index_t k = 1; k <= n; ++k) acc.add(a.at(k, s) * lambda.pow(s.at(k)));
  return acc.value();
}

/// |psi_n| at a general turn, by direct summation.
[[nodiscard]] inline double modulated_abs_at_turn(const ModulationSeq& a, const Schedule& s, index_t n, double turn) {
  KahanComplexSum acc;
  for (index_t k = 1; k <= n; ++k) acc.add(a.at(k, s) * cis_turns(frac_mul(s.at(k), turn)));
  return std::abs(acc.value());
}

struct CircleSup {
  double value = 0.0;       ///< heuristic sup: max of grid max and refined value
  double grid_max = 0.0;    ///< certified lower bound
  double argmax_turn = 0.0;
  std::size_t M = 0;
  bool coarse = false;
};

/*!
  max over |lambda| = 1 of |psi_n(lambda)|: inverse DFT of the coefficients
  folded modulo M, then a golden-section refinement within one grid step of
  the grid argmax. Requires M >= 4 n_n unless `allow_coarse`.
*/
[[nodiscard]] inline CircleSup sup_circle(const ModulationSeq& a, const Schedule& s, index_t n, std::size_t M_grid,
                                          bool allow_coarse = false) {
  CircleSup out;
  out.M = M_grid;
  if (n == 0 || a.is_zero()) return out;
  const index_t top = s.at(n);
  out.coarse = static_cast<long double>(M_grid) < 4.0L * static_cast<long double>(top);
  if (out.coarse && !allow_coarse) {
    throw DomainError("grid of " + std::to_string(M_grid) + " points is coarser than 4*n_n = " +
                      std::to_string(4 * top) + " (pass --allow-coarse to override)");
  }
  std::vector<cplx> coeff(M_grid, cplx{});
  for (index_t k = 1; k <= n; ++k) coeff[static_cast<std::size_t>(s.at(k) % M_grid)] += a.at(k, s);
  const std::vector<cplx> vals = detail::backward_dft(std::move(coeff));
  std::size_t best = 0;
  for (std::size_t j = 1; j < vals.size(); ++j) {
    if (std::abs(vals[j]) > std::abs(vals[best])) best = j;
  }
  out.grid_max = std::abs(vals[best]);
  const double step = 1.0 / static_cast<double>(M_grid);
  const double center = static_cast<double>(best) * step;
  const auto [t, v] = detail::golden_max([&](double th) { return modulated_abs_at_turn(a, s, n, th); },
                                         center - step, center + step);
  out.value = std::max(out.grid_max, v);
  out.argmax_turn = v > out.grid_max ? t - std::floor(t) : center;
  return out;
}

/// Smallest power of two >= max(4 n_n, floor).
[[nodiscard]] inline std::size_t oversampled_grid(const Schedule& s, index_t n, std::size_t floor_size = 256) {
  std::size_t M = 1;
  const long double need = std::max<long double>(4.0L * static_cast<long double>(s.at(n)), floor_size);
  while (static_cast<long double>(M) < need) M <<= 1;
  return M;
}

struct KMeasure {
  double K = 0.0;
  double K_grid = 0.0;
  index_t n_at = 0;
  double turn_at = 0.0;
  std::size_t M = 0;
};

/*!
  K = sup_{n <= n_max} max_lambda |psi_n(lambda)| / G_n, scanned on the
  M-point grid for every n (incremental update, twiddle table lookup),
  then refined at the best (n, lambda).
*/
[[nodiscard]] inline KMeasure measure_K(const ModulationSeq& a, const Schedule& s, const WeightSeq& G, index_t n_max,
                                        std::size_t M = 0, bool allow_coarse = false) {
  KMeasure out;
  if (M == 0) M = oversampled_grid(s, n_max);
  out.M = M;
  if (!allow_coarse && static_cast<long double>(M) < 4.0L * static_cast<long double>(s.at(n_max))) {
    throw DomainError("grid coarser than 4*n_n for the K scan");
  }
  if (a.is_zero()) return out;
  // Cache-blocked over the grid: each tile of lambdas accumulates psi_k for
  // every k, and per-k tile maxima are merged afterwards. Within a tile,
  // lambda_j^{n_k} is an anchor from the twiddle table every kRun points
  // times an in-run factor (also a table entry). Real arithmetic throughout
  // (std::complex products take the NaN-checking slow path).
  constexpr std::size_t kTile = 4096;
  constexpr std::size_t kRun = 64;
  std::vector<double> tw_re(M), tw_im(M);
  for (std::size_t m = 0; m < M; ++m) {
    const cplx t = cis_turns(static_cast<double>(m) / static_cast<double>(M));
    tw_re[m] = t.real();
    tw_im[m] = t.imag();
  }
  std::vector<double> a_re(n_max + 1), a_im(n_max + 1);
  std::vector<std::size_t> step(n_max + 1);
  for (index_t k = 1; k <= n_max; ++k) {
    const cplx ak = a.at(k, s);
    a_re[k] = ak.real();
    a_im[k] = ak.imag();
    step[k] = static_cast<std::size_t>(s.at(k) % M);
  }
  std::vector<double> row_max2(n_max + 1, -1.0);
  std::vector<std::size_t> row_arg(n_max + 1, 0);
  const std::size_t tile = std::min(kTile, M);
  std::vector<double> re(tile), im(tile);
  double p_re[kRun], p_im[kRun];  // lambda_j^{n_k} relative to the run anchor
  for (std::size_t t0 = 0; t0 < M; t0 += tile) {
    const std::size_t len = std::min(tile, M - t0);
    std::fill(re.begin(), re.end(), 0.0);
    std::fill(im.begin(), im.end(), 0.0);
    for (index_t k = 1; k <= n_max; ++k) {
      const std::size_t st = step[k];
      for (std::size_t t = 0; t < kRun; ++t) {
        const auto e = static_cast<std::size_t>((static_cast<unsigned __int128>(t) * st) % M);
        p_re[t] = tw_re[e];
        p_im[t] = tw_im[e];
      }
      for (std::size_t r0 = 0; r0 < len; r0 += kRun) {
        const auto anchor =
            static_cast<std::size_t>((static_cast<unsigned __int128>(t0 + r0) * st) % static_cast<unsigned __int128>(M));
        const double zr = a_re[k] * tw_re[anchor] - a_im[k] * tw_im[anchor];
        const double zi = a_re[k] * tw_im[anchor] + a_im[k] * tw_re[anchor];
        const std::size_t n = std::min(kRun, len - r0);
        double* __restrict__ xr = re.data() + r0;
        double* __restrict__ xi = im.data() + r0;
        for (std::size_t t = 0; t < n; ++t) {
          xr[t] += zr * p_re[t] - zi * p_im[t];
          xi[t] += zr * p_im[t] + zi * p_re[t];
        }
      }
      if (k < G.n0()) continue;
      double top = row_max2[k];
      std::size_t at = M;
      for (std::size_t j = 0; j < len; ++j) {
        const double v = re[j] * re[j] + im[j] * im[j];
        if (v > top) {
          top = v;
          at = j;
        }
      }
      if (at < M) {
        row_max2[k] = top;
        row_arg[k] = t0 + at;
      }
    }
  }
  double best = 0.0;
  for (index_t k = std::max<index_t>(1, G.n0()); k <= n_max; ++k) {
    const double r = std::sqrt(std::max(0.0, row_max2[k])) / G.value(k);
    if (r > best) {
      best = r;
      out.n_at = k;
      out.turn_at = static_cast<double>(row_arg[k]) / static_cast<double>(M);
    }
  }
  out.K_grid = best;
  out.K = out.K_grid;
  if (out.n_at > 0) {
    const double step = 1.0 / static_cast<double>(M);
    const auto [t, v] = detail::golden_max([&](double th) { return modulated_abs_at_turn(a, s, out.n_at, th); },
                                           out.turn_at - step, out.turn_at + step);
    const double refined = v / G.value(out.n_at);
    if (refined > out.K) {
      out.K = refined;
      out.turn_at = t - std::floor(t);
    }
  }
  return out;
}

/// One row of a transform trace; absent columns are NaN.
struct TraceRow {
  index_t n = 0;
  double norm_Sn_over_Wn = std::numeric_limits<double>::quiet_NaN();
  double series_partial_norm = std::numeric_limits<double>::quiet_NaN();
  double running_max_Lp = std::numeric_limits<double>::quiet_NaN();
  double sup_circle = std::numeric_limits<double>::quiet_NaN();
};

using TransformTrace = std::vector<TraceRow>;

/// Pointwise running maximum of |v(x)| (Euclidean norm on C^d) and its L_p norm.
class RunningMax {
 public:
  void update(const VectorField& v) {
    if (max_.empty()) {
      max_.assign(static_cast<std::size_t>(v.values.rows()), 0.0);
      weight_ = v.space.weight();
    }
    for (Eigen::Index i = 0; i < v.values.rows(); ++i) {
      max_[static_cast<std::size_t>(i)] = std::max(max_[static_cast<std::size_t>(i)], v.values.row(i).norm());
    }
  }
  [[nodiscard]] double norm(double p) const {
    KahanSum acc;
    for (double m : max_) acc.add(std::pow(m, p));
    return std::pow(acc.value() * weight_, 1.0 / p);
  }
  [[nodiscard]] const std::vector<double>& values() const { return max_; }

 private:
  std::vector<double> max_;
  double weight_ = 1.0;
};

/*!
  Trace of S_n/W_n and of the series sum_{k<=n} f_k/W_k (from k = n0 of W).
  Rows at the ladder points; the running max is of ||S_n||/W_n pointwise.
*/
[[nodiscard]] inline TransformTrace slln_trace(const FieldSeq& f, const WeightSeq& W, const std::vector<index_t>& ladder,
                                               double p = 2.0) {
  TransformTrace rows;
  if (ladder.empty()) return rows;
  const index_t n_max = *std::max_element(ladder.begin(), ladder.end());
  PrefixSum S;
  VectorField series;
  RunningMax maxfn;
  std::size_t li = 0;
  std::vector<index_t> sorted = ladder;
  std::sort(sorted.begin(), sorted.end());
  for (index_t k = 1; k <= n_max; ++k) {
    const VectorField fk = f(k);
    S.push(fk);
    if (k < W.n0()) continue;
    const double wk = W.eval(k);
    if (k == W.n0()) {
      series = fk;
      series.values /= wk;
    } else {
      series.values += fk.values / wk;
    }
    VectorField avg = S.sum();
    avg.values /= wk;
    maxfn.update(avg);
    while (li < sorted.size() && sorted[li] < k) ++li;
    if (li < sorted.size() && sorted[li] == k) {
      TraceRow r;
      r.n = k;
      r.norm_Sn_over_Wn = avg.norm(p);
      r.series_partial_norm = series.norm(p);
      r.running_max_Lp = maxfn.norm(p);
      rows.push_back(r);
    }
  }
  return rows;
}

/*!
  Pointwise Cauchy gaps of sum_k f_k/W_k: entry [i][j] is the norm at point i
  of the block sum over ladder[j] < k <= ladder[j+1] (summed blockwise, not
  as a difference of partial sums).
*/
[[nodiscard]] inline std::vector<std::vector<double>> series_block_gaps(const FieldSeq& f, const WeightSeq& W,
                                                                        std::vector<index_t> ladder) {
  std::sort(ladder.begin(), ladder.end());
  std::vector<std::vector<double>> gaps;
  if (ladder.size() < 2) return gaps;
  Matrix block;
  for (index_t k = std::max(W.n0(), ladder.front() + 1); k <= ladder.back(); ++k) {
    const VectorField fk = f(k);
    if (gaps.empty()) {
      gaps.assign(static_cast<std::size_t>(fk.values.rows()), {});
      block = Matrix::Zero(fk.values.rows(), fk.values.cols());
    }
    block += fk.values / W.eval(k);
    if (std::binary_search(ladder.begin(), ladder.end(), k)) {
      for (Eigen::Index i = 0; i < block.rows(); ++i) gaps[static_cast<std::size_t>(i)].push_back(block.row(i).norm());
      block.setZero();
    }
  }
  return gaps;
}

namespace detail {

inline void require_bounded_operator(const LinearOperator& T) {
  if (!T.power_bounded()) {
    throw DomainError("operator carries neither a contraction nor a power-bounded flag");
  }
}

/// Walks T^{n_k} f along the schedule, reusing the previous power.
class OrbitWalker {
 public:
  OrbitWalker(const LinearOperator& T, const Schedule& s, const VectorField& f) : T_(T), s_(s), cur_(f) {}

  const VectorField& advance_to(index_t k) {
    const index_t target = s_.at(k);
    cur_ = T_.apply_power(target - pos_, cur_);
    pos_ = target;
    return cur_;
  }

 private:
  const LinearOperator& T_;
  const Schedule& s_;
  VectorField cur_;
  index_t pos_ = 0;
};

}  // namespace detail

/*!
  sum_{k=n0}^{n} a_k T^{n_k} f / (k^{beta t} W_k). At t = 0 no damping
  factor is applied, so the result is bit-identical to hilbert_partial.
*/
[[nodiscard]] inline VectorField phi_series(const ModulationSeq& a, const LinearOperator& T, const Schedule& s,
                                            const WeightSeq& W, double beta, double t, const VectorField& f, index_t n,
                                            RunningMax* maxfn = nullptr) {
  detail::require_bounded_operator(T);
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("phi_series needs 0 <= t <= 1");
  VectorField out = VectorField::zero(f.space, f.dim());
  if (a.is_zero()) return out;
  const double damping = beta * t;
  detail::OrbitWalker walk(T, s, f);
  for (index_t k = W.n0(); k <= n; ++k) {
    const VectorField& v = walk.advance_to(k);
    cplx c = a.at(k, s) / W.eval(k);
    if (damping != 0.0) c /= std::pow(static_cast<double>(k), damping);
    out.values += c * v.values;
    if (maxfn) maxfn->update(out);
  }
  return out;
}

/// sum_{k=n0}^{n} a_k T^{n_k} f / W_k.
[[nodiscard]] inline VectorField hilbert_partial(const ModulationSeq& a, const LinearOperator& T, const Schedule& s,
                                                 const WeightSeq& W, const VectorField& f, index_t n) {
  return phi_series(a, T, s, W, 0.0, 0.0, f, n);
}

/// Hilbert-transform trace at ladder points: series norm and running maximal function.
[[nodiscard]] inline TransformTrace hilbert_trace(const ModulationSeq& a, const LinearOperator& T, const Schedule& s,
                                                  const WeightSeq& W, const VectorField& f,
                                                  const std::vector<index_t>& ladder, double p = 2.0) {
  detail::require_bounded_operator(T);
  TransformTrace rows;
  std::vector<index_t> sorted = ladder;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.empty()) return rows;
  VectorField out = VectorField::zero(f.space, f.dim());
  RunningMax maxfn;
  detail::OrbitWalker walk(T, s, f);
  std::size_t li = 0;
  for (index_t k = W.n0(); k <= sorted.back(); ++k) {
    if (!a.is_zero()) {
      const VectorField& v = walk.advance_to(k);
      out.values += (a.at(k, s) / W.eval(k)) * v.values;
    }
    maxfn.update(out);
    while (li < sorted.size() && sorted[li] < k) ++li;
    if (li < sorted.size() && sorted[li] == k) {
      TraceRow r;
      r.n = k;
      r.series_partial_norm = out.norm(p);
      r.running_max_Lp = maxfn.norm(p);
      rows.push_back(r);
    }
  }
  return rows;
}

struct BoundCheck {
  double max_ratio = 0.0;
  double tolerance = 0.0;
  std::string worst;  ///< location of the worst ratio
  std::size_t evaluations = 0;
  [[nodiscard]] bool ok() const { return max_ratio <= 1.0 + tolerance; }
};

/*!
  |sum_{k<=n} a_k k^{ir} lambda^{n_k}| <= |r| K G_{n,r} at every requested
  (r, n, lambda); reports the worst ratio LHS/RHS.
*/
[[nodiscard]] inline BoundCheck twisted_bound_check(const ModulationSeq& a, const Schedule& s, const WeightSeq& G,
                                                    double K, const std::vector<double>& rs,
                                                    const std::vector<UnitPoint>& lambdas,
                                                    const std::vector<index_t>& ladder, double tolerance = 1e-6) {
  BoundCheck out;
  out.tolerance = tolerance;
  if (ladder.empty()) return out;
  std::vector<index_t> sorted = ladder;
  std::sort(sorted.begin(), sorted.end());
  const index_t n_max = sorted.back();
  for (double r : rs) {
    const TwistedWeight Gr(G, r);
    const ModulationSeq tw = ModulationSeq::twist(r);
    for (const UnitPoint& lam : lambdas) {
      KahanComplexSum acc;
      std::size_t li = 0;
      for (index_t k = 1; k <= n_max; ++k) {
        acc.add(a.at(k, s) * tw.base(k) * lam.pow(s.at(k)));
        while (li < sorted.size() && sorted[li] < k) ++li;
        if (li < sorted.size() && sorted[li] == k && k >= G.n0()) {
          const double lhs = std::abs(acc.value());
          const double rhs = std::abs(r) * K * Gr(k);
          const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
          ++out.evaluations;
          if (ratio > out.max_ratio) {
            out.max_ratio = ratio;
            out.worst = "r=" + detail::format_double(r) + " n=" + std::to_string(k) +
                        " lambda=" + detail::format_double(lam.turns);
          }
        }
      }
    }
  }
  return out;
}

/*!
  (n ||a||_inf)^{(2-p)/p} (K G_n)^{2(p-1)/p}; the endpoints reduce to K G_n
  at p = 2 and n ||a||_inf at p = 1.
*/
[[nodiscard]] inline double riesz_thorin_bound(index_t n, double a_sup, double K, double G_n, double p) {
  if (!(p >= 1.0 && p <= 2.0)) throw DomainError("interpolation bound needs p in [1,2]");
  if (p == 2.0) return K * G_n;
  if (p == 1.0) return static_cast<double>(n) * a_sup;
  const auto [eg, en] = interpolation_exponents(p);
  return std::pow(static_cast<double>(n) * a_sup, en) * std::pow(K * G_n, eg);
}

/// ||sum_{k<=n} a_k T^{n_k} f||_p <= bound(n) ||f||_p for a Dunford-Schwartz T.
[[nodiscard]] inline BoundCheck interpolation_bound_check(const ModulationSeq& a, const LinearOperator& T,
                                                          const Schedule& s, const WeightSeq& G, double K, double p,
                                                          const std::vector<VectorField>& fields,
                                                          const std::vector<index_t>& ladder,
                                                          double tolerance = 1e-8) {
  if (!T.is_dunford_schwartz()) throw DomainError("interpolation bound needs a Dunford-Schwartz operator");
  if (!(p > 1.0 && p < 2.0)) throw DomainError("interpolation bound check needs 1 < p < 2");
  BoundCheck out;
  out.tolerance = tolerance;
  std::vector<index_t> sorted = ladder;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.empty()) return out;
  const double a_sup = a.sup_bound();
  for (std::size_t fi = 0; fi < fields.size(); ++fi) {
    const VectorField& f = fields[fi];
    const double fnorm = f.norm(p);
    VectorField acc = VectorField::zero(f.space, f.dim());
    detail::OrbitWalker walk(T, s, f);
    std::size_t li = 0;
    for (index_t k = 1; k <= sorted.back(); ++k) {
      acc.values += a.at(k, s) * walk.advance_to(k).values;
      while (li < sorted.size() && sorted[li] < k) ++li;
      if (li < sorted.size() && sorted[li] == k && k >= G.n0()) {
        const double bound = riesz_thorin_bound(k, a_sup, K, G.value(k), p) * fnorm;
        const double lhs = acc.norm(p);
        const double ratio = bound > 0.0 ? lhs / bound : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        ++out.evaluations;
        if (ratio > out.max_ratio) {
          out.max_ratio = ratio;
          out.worst = "field=" + std::to_string(fi) + " n=" + std::to_string(k);
        }
      }
    }
  }
  return out;
}

struct OpnormRow {
  index_t j = 0, n = 0;
  double gap = 0.0;        ///< || sum_{j<k<=n} a_k A^{n_k}/W_k ||
  double tail = 0.0;       ///< K sum_{k>=j} (G_k/W_k)(1 - W_k/W_{k+1})
  double head_j = 0.0;     ///< ||S_j(A)|| / W_j
  double head_n = 0.0;     ///< ||S_n(A)|| / W_n
  [[nodiscard]] double bound() const { return tail + head_j + head_n; }
  [[nodiscard]] bool ok() const { return gap <= bound() * (1.0 + 1e-12); }
};

struct OpnormReport {
  std::vector<OpnormRow> rows;
  double K = 0.0;
  double K_direct = 0.0;  ///< max_m ||S_m(A)||/G_m, must not exceed K
  bool monotone = true;
  [[nodiscard]] bool bounded() const {
    for (const auto& r : rows) {
      if (!r.ok()) return false;
    }
    return true;
  }
};

/*!
  Operator-norm Cauchy table of sum_k a_k A^{n_k}/W_k along the ladder.
  Gaps are summed blockwise (not as differences of partial sums) so that
  geometrically small blocks keep their relative accuracy.
*/
[[nodiscard]] inline OpnormReport opnorm_series(const ModulationSeq& a, const Matrix& A, const Schedule& s,
                                                const WeightSeq& W, const WeightSeq& G, double K,
                                                const std::vector<index_t>& ladder, index_t tail_terms = 1'000'000) {
  if (operator_norm(A) > 1.0 + 1e-12) throw DomainError("opnorm_series needs a contraction");
  OpnormReport rep;
  rep.K = K;
  std::vector<index_t> sorted = ladder;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.empty()) return rep;
  const index_t n0 = std::max(W.n0(), G.n0());
  const Eigen::Index d = A.rows();
  const PowerCache cache(A);

  // T21 tail sums: suffix[j] = sum_{k>=j} term_k, summed to tail_terms plus the class integral.
  const AdmissibilityReport t21 = check_T21(G, W, Ladder{{tail_terms}});
  const double tail_rest = t21.tail_bound.value_or(0.0);
  std::vector<double> suffix(sorted.size());
  {
    KahanSum acc;
    acc.add(tail_rest);
    std::size_t li = sorted.size();
    for (index_t k = tail_terms; k >= n0; --k) {
      acc.add(T21_term(G, W, k));
      while (li > 0 && sorted[li - 1] == k) suffix[--li] = acc.value();
      if (k == n0) break;
    }
  }

  Matrix S = Matrix::Zero(d, d);      // S_m(A) = sum_{k<=m} a_k A^{n_k}
  Matrix block = Matrix::Zero(d, d);  // running block of the weighted series
  Matrix P = Matrix::Identity(d, d);
  index_t pos = 0;
  std::vector<double> head(sorted.size());
  std::vector<double> gaps;
  std::size_t li = 0;
  bool started = false;
  for (index_t k = 1; k <= sorted.back(); ++k) {
    const index_t nk = s.at(k);
    P = P * cache.power(nk - pos);
    pos = nk;
    const cplx ak = a.at(k, s);
    S += ak * P;
    if (k >= G.n0()) rep.K_direct = std::max(rep.K_direct, operator_norm(S) / G.value(k));
    if (k >= n0 && started) block += (ak / W.eval(k)) * P;
    while (li < sorted.size() && sorted[li] < k) ++li;
    if (li < sorted.size() && sorted[li] == k) {
      head[li] = operator_norm(S) / W.eval(k);
      if (started) gaps.push_back(operator_norm(block));
      block.setZero();
      started = true;
      ++li;
    }
  }
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    OpnormRow r;
    r.j = sorted[i];
    r.n = sorted[i + 1];
    r.gap = gaps[i];
    r.tail = K * suffix[i];
    r.head_j = head[i];
    r.head_n = head[i + 1];
    rep.rows.push_back(r);
    if (i > 0 && !(r.gap < rep.rows[i - 1].gap)) rep.monotone = false;
  }
  return rep;
}

/*!
  sigma(t) = 2 (sum_k sin^2(n_k t/2) / G_k^2)^{1/2} truncated at N, with an
  upper bracket that adds min(sum_{k>N} 1/G_k^2, |t/2|^alpha sum_{k>N} n_k^alpha/G_k^2).
*/
class SigmaModel {
 public:
  SigmaModel(WeightSeq G, Schedule s, index_t N, double alpha) : G_(std::move(G)), s_(std::move(s)), N_(N), alpha_(alpha) {
    if (N_ < G_.n0()) throw DomainError("sigma truncation below n0");
    KahanSum s0, sa;
    for (index_t k = G_.n0(); k <= N_; ++k) {
      const double g = G_.value(k);
      c_.push_back(1.0 / (g * g));
      nk_.push_back(s_.at(k));
      s0.add(c_.back());
      sa.add(std::pow(static_cast<double>(nk_.back()), alpha_) * c_.back());
    }
    S0_ = s0.value();
    gamma_N_ = sa.value();
    if (G_.asymptotic()) {
      tail_inv_ = class_tail_integral(G_.asymptotic()->pow(-2.0), static_cast<double>(N_));
      if (const auto nka = asymptotic_class(WeightExpr::power(alpha_), s_)) {
        tail_alpha_ = class_tail_integral(*nka / G_.asymptotic()->pow(2.0), static_cast<double>(N_));
      }
    }
  }

  struct Value {
    double lower = 0.0;
    double upper = 0.0;
  };

  /// Direct evaluation at one t.
  [[nodiscard]] Value at(double t) const {
    KahanSum acc;
    for (std::size_t i = 0; i < c_.size(); ++i) {
      const double sn = std::sin(static_cast<double>(nk_[i]) * t / 2.0);
      acc.add(sn * sn * c_[i]);
    }
    return bracket(acc.value(), t);
  }

  /*!
    Values on t_j = 2 pi j / L, j < L, via one inverse DFT:
    sin^2(x/2) = (1 - cos x)/2 and cos(n_k t_j) depends on n_k mod L only.
  */
  [[nodiscard]] std::vector<Value> on_grid(std::size_t L) const {
    // Terms with n_k = 0 mod L vanish on the whole grid and are left out.
    std::vector<cplx> coeff(L, cplx{});
    KahanSum s0;
    for (std::size_t i = 0; i < c_.size(); ++i) {
      const auto r = static_cast<std::size_t>(nk_[i] % L);
      if (r == 0) continue;
      coeff[r] += c_[i];
      s0.add(c_[i]);
    }
    const std::vector<cplx> C = detail::backward_dft(std::move(coeff));
    std::vector<Value> out(L);
    for (std::size_t j = 0; j < L; ++j) {
      const double t = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(L);
      out[j] = bracket(j == 0 ? 0.0 : std::max(0.0, 0.5 * (s0.value() - C[j].real())), t);
    }
    return out;
  }

  [[nodiscard]] double gamma_truncated() const { return gamma_N_; }
  [[nodiscard]] std::optional<double> tail_inverse_squares() const { return tail_inv_; }
  [[nodiscard]] std::optional<double> tail_gamma() const { return tail_alpha_; }
  [[nodiscard]] index_t truncation() const { return N_; }

 private:
  [[nodiscard]] Value bracket(double partial, double t) const {
    Value v;
    v.lower = 2.0 * std::sqrt(partial);
    double tail = std::numeric_limits<double>::infinity();
    if (tail_inv_) tail = *tail_inv_;
    if (tail_alpha_) tail = std::min(tail, std::pow(std::abs(t / 2.0), alpha_) * *tail_alpha_);
    v.upper = 2.0 * std::sqrt(partial + tail);
    return v;
  }

  WeightSeq G_;
  Schedule s_;
  index_t N_;
  double alpha_;
  std::vector<double> c_;
  std::vector<index_t> nk_;
  double S0_ = 0.0;
  double gamma_N_ = 0.0;
  std::optional<double> tail_inv_;
  std::optional<double> tail_alpha_;
};

/// sigma(t) truncated at N (lower bracket) with the upper bracket.
[[nodiscard]] inline SigmaModel::Value sigma_of_t(const WeightSeq& G, const Schedule& s, double t, index_t N,
                                                  double alpha = 0.5) {
  return SigmaModel(G, s, N, alpha).at(t);
}

/// 2^{1-alpha/2} |t|^{alpha/2} sqrt(gamma)
[[nodiscard]] inline double sigma_pointwise_bound(double t, double alpha, double gamma) {
  return std::pow(2.0, 1.0 - alpha / 2.0) * std::pow(std::abs(t), alpha / 2.0) * std::sqrt(gamma);
}

struct Rearrangement {
  std::vector<double> sigma_bar;  ///< step values on consecutive cells of width 2 pi / L, nondecreasing
  double I = 0.0;
  bool diverged = false;
};

/*!
  sigma-bar(s) = sup{u : m(u) < s} with m(u) = |{sigma < u}|, read off the
  ascending sort of the samples (each sample carries measure 2 pi / L), and
  I = int_0^{2 pi} sigma-bar(s) / (s sqrt(log(8 pi / s))) ds, integrated
  exactly on every step with the antiderivative -2 sqrt(log(8 pi / s)).
  A nonzero first step makes the integral diverge at s = 0.
*/
[[nodiscard]] inline Rearrangement rearrangement_and_I(std::vector<double> sigma) {
  Rearrangement out;
  if (sigma.empty()) return out;
  std::sort(sigma.begin(), sigma.end());
  const double L = static_cast<double>(sigma.size());
  const double h = 2.0 * std::numbers::pi / L;
  const double eight_pi = 8.0 * std::numbers::pi;
  const auto F = [&](double s) { return std::sqrt(std::log(eight_pi / s)); };
  if (sigma.front() > 0.0) out.diverged = true;
  KahanSum acc;
  for (std::size_t i = 1; i < sigma.size(); ++i) {
    const double a = h * static_cast<double>(i), b = h * static_cast<double>(i + 1);
    acc.add(sigma[i] * 2.0 * (F(a) - F(b)));
  }
  out.I = out.diverged ? std::numeric_limits<double>::infinity() : acc.value();
  out.sigma_bar = std::move(sigma);
  return out;
}

/*!
  int_0^{2 pi} s^{alpha/2 - 1} (log(8 pi/s))^{-1/2} ds via s = 8 pi e^{-u^2}:
  2 (8 pi)^{alpha/2} int_{u_min}^inf e^{-alpha u^2/2} du, u_min = sqrt(ln 4),
  by the trapezoid rule with the cut-off chosen so the dropped tail is
  below 1e-8 of the total.
*/
[[nodiscard]] inline double sigma_majorant_integral(double alpha, std::size_t panels = 200000) {
  const double u_min = std::sqrt(std::log(4.0));
  const double c = alpha / 2.0;
  // Tail beyond U is at most e^{-c U^2}/(2 c U); pick U with that below 1e-8 * value at u_min scale.
  const double head = std::exp(-c * u_min * u_min);
  double U = u_min + 1.0;
  while (std::exp(-c * U * U) / (2.0 * c * U) > 1e-10 * head) U += 0.5;
  const double h = (U - u_min) / static_cast<double>(panels);
  KahanSum acc;
  for (std::size_t i = 0; i <= panels; ++i) {
    const double u = u_min + h * static_cast<double>(i);
    const double w = (i == 0 || i == panels) ? 0.5 : 1.0;
    acc.add(w * std::exp(-c * u * u));
  }
  return 2.0 * std::pow(8.0 * std::numbers::pi, alpha / 2.0) * acc.value() * h;
}

/// Closed form of sigma_majorant_integral: 2 (8 pi)^{alpha/2} sqrt(pi/(2 alpha)) erfc(u_min sqrt(alpha/2)).
[[nodiscard]] inline double sigma_majorant_closed(double alpha) {
  const double u_min = std::sqrt(std::log(4.0));
  return 2.0 * std::pow(8.0 * std::numbers::pi, alpha / 2.0) * std::sqrt(std::numbers::pi / (2.0 * alpha)) *
         std::erfc(u_min * std::sqrt(alpha / 2.0));
}

/// Analytic majorant of I: 2^{1-alpha/2} sqrt(gamma) times the integral above.
[[nodiscard]] inline double I_majorant(double alpha, double gamma) {
  return std::pow(2.0, 1.0 - alpha / 2.0) * std::sqrt(gamma) * sigma_majorant_integral(alpha);
}

}  // namespace ergolab
