#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ergolab/admissibility.hpp"
#include "ergolab/operators.hpp"
#include "ergolab/parallel.hpp"
#include "ergolab/random_stream.hpp"
#include "ergolab/schedule.hpp"
#include "ergolab/summation.hpp"
#include "ergolab/transforms.hpp"
#include "ergolab/weight.hpp"

namespace ergolab {

/// Nearest-rank q-quantile (q in (0,1]).
[[nodiscard]] inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::min(v.size(), std::max<std::size_t>(rank, 1)) - 1];
}

/// Preconditions attached to a Monte Carlo run.
struct RegimeCheck {
  std::vector<AdmissibilityReport> reports;
  std::vector<Verdict> required;  ///< expected verdict per report

  void require(AdmissibilityReport rep, Verdict want) {
    reports.push_back(std::move(rep));
    required.push_back(want);
  }
  [[nodiscard]] bool passed() const {
    for (std::size_t i = 0; i < reports.size(); ++i) {
      if (reports[i].verdict != required[i]) return false;
    }
    return !reports.empty();
  }
  [[nodiscard]] std::string failures() const {
    std::string out;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      if (reports[i].verdict == required[i]) continue;
      if (!out.empty()) out += ", ";
      out += reports[i].kind + " " + to_string(reports[i].verdict);
    }
    return out;
  }
};

inline constexpr const char* kTheoremRegime = "theorem-regime";
inline constexpr const char* kOutsideRegime = "OUTSIDE-THEOREM-REGIME";

/// Summary of a per-sample statistic.
struct MCEstimate {
  std::string statistic;
  std::vector<double> values;
  double p = 2.0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string regime = kOutsideRegime;
  std::vector<std::string> report_hashes;
  nlohmann::json extra = nlohmann::json::object();

  [[nodiscard]] std::size_t samples() const { return values.size(); }
  [[nodiscard]] double mean() const {
    if (values.empty()) return 0.0;
    KahanSum s;
    for (double v : values) s.add(v);
    return s.value() / static_cast<double>(values.size());
  }
  [[nodiscard]] double moment() const {
    if (values.empty()) return 0.0;
    KahanSum s;
    for (double v : values) s.add(std::pow(std::abs(v), p));
    return s.value() / static_cast<double>(values.size());
  }
  [[nodiscard]] double max() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, v);
    return m;
  }

  /// Labels the run from its precondition reports.
  void gate(const RegimeCheck& rc) {
    regime = rc.passed() ? kTheoremRegime : kOutsideRegime;
    report_hashes.clear();
    for (const auto& r : rc.reports) report_hashes.push_back(r.kind + ":" + r.hash());
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j;
    j["statistic"] = statistic;
    j["samples"] = samples();
    j["mean"] = mean();
    j["p"] = p;
    j["moment_p"] = moment();
    j["max"] = max();
    j["seed"] = seed;
    j["config_hash"] = config_hash;
    j["regime"] = regime;
    j["report_hashes"] = report_hashes;
    j["values"] = values;
    j["extra"] = extra;
    return j;
  }
};

/// Per-sample sup statistic with its ladder trace.
struct SupStatResult {
  MCEstimate estimate;
  std::vector<index_t> ladder;
  std::vector<std::vector<double>> running_sup;  ///< [sample][j]: sup over ladder[0..j] of max_lambda |psi_n|/G_n
  std::vector<std::vector<double>> series_gaps;  ///< [sample][j]: max_lambda |sum_{ladder[j]<k<=ladder[j+1]} f_k lambda^{n_k}/G_k|

  /// q-quantile over samples of the running sup at ladder entry j.
  [[nodiscard]] double quantile_at(std::size_t j, double q) const {
    std::vector<double> v;
    for (const auto& row : running_sup) v.push_back(row[j]);
    return quantile(v, q);
  }
};

/*!
  For each sample y: sup over the ladder of max over the M-point lambda grid
  of |(1/G_n) sum_{k<=n} f_k(y) lambda^{n_k}|, each grid evaluated by one
  inverse DFT. M defaults to the 4 n_n oversampling rule.
*/
[[nodiscard]] inline SupStatResult random_sup_stat(const RandomStream& law, const WeightSeq& G, const Schedule& sched,
                                                   std::vector<index_t> ladder, std::size_t samples,
                                                   std::size_t M = 0, unsigned threads = 1,
                                                   bool allow_coarse = false) {
  if (samples == 0) throw DomainError("random_sup_stat needs at least one sample");
  std::sort(ladder.begin(), ladder.end());
  ladder.erase(std::unique(ladder.begin(), ladder.end()), ladder.end());
  ladder.erase(std::remove_if(ladder.begin(), ladder.end(), [&](index_t n) { return n < G.n0(); }), ladder.end());
  if (ladder.empty()) throw DomainError("ladder has no entry at or above n0");
  const index_t top = ladder.back();
  if (M == 0) M = oversampled_grid(sched, top);
  if (!allow_coarse && static_cast<long double>(M) < 4.0L * static_cast<long double>(sched.at(top))) {
    throw DomainError("lambda grid coarser than 4*n_n");
  }
  std::vector<std::size_t> slot(top + 1);
  std::vector<double> g(top + 1, 0.0);
  for (index_t k = 1; k <= top; ++k) {
    slot[k] = static_cast<std::size_t>(sched.at(k) % M);
    if (k >= G.n0()) g[k] = G.value(k);
  }

  SupStatResult out;
  out.ladder = ladder;
  out.running_sup.assign(samples, std::vector<double>(ladder.size(), 0.0));
  out.series_gaps.assign(samples, std::vector<double>(ladder.size() - 1, 0.0));
  const auto max_abs = [](const std::vector<cplx>& v) {
    double m = 0.0;
    for (const cplx& z : v) m = std::max(m, std::abs(z));
    return m;
  };
  parallel_for(samples, threads, [&](std::size_t y) {
    std::vector<cplx> coeff(M, cplx{}), block(M, cplx{});
    std::size_t j = 0;
    double sup = 0.0;
    for (index_t k = 1; k <= top; ++k) {
      const cplx f = law(y, k);
      coeff[slot[k]] += f;
      if (j > 0 && k >= G.n0()) block[slot[k]] += f / g[k];
      if (k == ladder[j]) {
        sup = std::max(sup, max_abs(detail::backward_dft(coeff)) / g[k]);
        out.running_sup[y][j] = sup;
        if (j > 0) {
          out.series_gaps[y][j - 1] = max_abs(detail::backward_dft(block));
          std::fill(block.begin(), block.end(), cplx{});
        }
        ++j;
      }
    }
  });

  out.estimate.statistic = "sup_n max_lambda |psi_n|/G_n";
  out.estimate.seed = law.seed();
  for (const auto& row : out.running_sup) out.estimate.values.push_back(row.back());
  nlohmann::json q95 = nlohmann::json::array();
  for (std::size_t i = 0; i < ladder.size(); ++i) q95.push_back({{"n", ladder[i]}, {"q95", out.quantile_at(i, 0.95)}});
  out.estimate.extra["law"] = law.describe();
  out.estimate.extra["lambda_grid"] = M;
  out.estimate.extra["quantiles"] = q95;
  return out;
}

/// Scalar field h on the base space, one value per point.
using ScalarField = std::vector<cplx>;

namespace detail {

/// v_k = h(alpha^{n_k} omega) P(omega, n_k) g / W_k for k in [n0, top].
inline std::vector<Vector> cocycle_terms(const Cocycle& C, const ScalarField& h, const Vector& g, const Schedule& sched,
                                         const WeightSeq& W, std::size_t omega, index_t top,
                                         const std::optional<PowerCache>& cache) {
  const auto d = static_cast<Eigen::Index>(C.dim());
  std::vector<Vector> v(top + 1, Vector::Zero(d));
  Matrix P = Matrix::Identity(d, d);
  index_t pos = 0;
  std::size_t w = omega;  // alpha^pos omega
  constexpr index_t kMaxSteps = 50'000'000;
  for (index_t k = W.n0(); k <= top; ++k) {
    const index_t nk = sched.at(k);
    if (cache) {
      P = P * cache->power(nk - pos);
      w = C.base().map_index(w, nk - pos);
    } else {
      if (nk > kMaxSteps) throw DomainError("non-constant cocycle orbit too long for the schedule");
      for (; pos < nk; ++pos) {
        P = P * C.fiber_at_index(w);
        w = C.base().map_index(w);
      }
    }
    pos = nk;
    v[k] = (h[w] / W.eval(k)) * (P * g);
  }
  return v;
}

}  // namespace detail

/// sum_{k<=n} f_k(y) h(alpha^{n_k} omega) P(omega, n_k) g / W_k at every omega, for one sample.
[[nodiscard]] inline VectorField random_hilbert_partial(const RandomStream& law, std::uint64_t sample, const Cocycle& C,
                                                        const ScalarField& h, const Vector& g, const Schedule& sched,
                                                        const WeightSeq& W, index_t n) {
  const SampleSpace& space = C.base().space();
  if (h.size() != space.size()) throw DomainError("h must have one value per base point");
  std::optional<PowerCache> cache;
  if (C.is_constant()) cache.emplace(C.fiber_at_index(0));
  VectorField out = VectorField::zero(space, C.dim());
  for (std::size_t w = 0; w < space.size(); ++w) {
    const auto v = detail::cocycle_terms(C, h, g, sched, W, w, n, cache);
    Vector acc = Vector::Zero(static_cast<Eigen::Index>(C.dim()));
    for (index_t k = W.n0(); k <= n; ++k) acc += law(sample, k) * v[k];
    out.values.row(static_cast<Eigen::Index>(w)) = acc.transpose();
  }
  return out;
}

struct RandomHilbertResult {
  MCEstimate estimate;  ///< per sample: L2(mu) norm over omega of sup_{n<=top} ||S_n(y, omega)||
  std::vector<index_t> ladder;
  std::vector<std::vector<double>> max_gaps;    ///< [sample][j]: max over omega of the block norm
  std::vector<std::vector<double>> point_gaps;  ///< [(y, omega)][j]: block norms, for the a.e. diagnostic
};

/*!
  Monte Carlo random Hilbert transform of (RT41): for every sample y and
  base point omega, partial sums of f_k(y) h(alpha^{n_k} omega) P(omega, n_k) g / W_k.
  Base points are processed in parallel, each writing its own slots.
*/
[[nodiscard]] inline RandomHilbertResult random_hilbert(const RandomStream& law, const Cocycle& C, const ScalarField& h,
                                                        const Vector& g, const Schedule& sched, const WeightSeq& W,
                                                        std::vector<index_t> ladder, std::size_t samples,
                                                        unsigned threads = 1) {
  if (samples == 0) throw DomainError("random_hilbert needs at least one sample");
  const SampleSpace& space = C.base().space();
  if (h.size() != space.size()) throw DomainError("h must have one value per base point");
  std::sort(ladder.begin(), ladder.end());
  ladder.erase(std::unique(ladder.begin(), ladder.end()), ladder.end());
  ladder.erase(std::remove_if(ladder.begin(), ladder.end(), [&](index_t n) { return n < W.n0(); }), ladder.end());
  if (ladder.empty()) throw DomainError("ladder has no entry at or above n0");
  const index_t top = ladder.back();
  const std::size_t P = space.size();

  std::vector<std::vector<cplx>> f(samples, std::vector<cplx>(top + 1));
  parallel_for(samples, threads, [&](std::size_t y) {
    for (index_t k = W.n0(); k <= top; ++k) f[y][k] = law(y, k);
  });
  std::optional<PowerCache> cache;
  if (C.is_constant()) cache.emplace(C.fiber_at_index(0));

  // slots [omega][y]
  std::vector<std::vector<double>> runmax(P, std::vector<double>(samples, 0.0));
  std::vector<std::vector<std::vector<double>>> gaps(
      P, std::vector<std::vector<double>>(samples, std::vector<double>(ladder.size() - 1, 0.0)));
  parallel_for(P, threads, [&](std::size_t w) {
    const auto v = detail::cocycle_terms(C, h, g, sched, W, w, top, cache);
    const auto d = static_cast<Eigen::Index>(C.dim());
    for (std::size_t y = 0; y < samples; ++y) {
      Vector S = Vector::Zero(d), block = Vector::Zero(d);
      double m = 0.0;
      std::size_t j = 0;
      for (index_t k = W.n0(); k <= top; ++k) {
        const Vector term = f[y][k] * v[k];
        S += term;
        if (j > 0) block += term;
        m = std::max(m, S.norm());
        if (k == ladder[j]) {
          if (j > 0) {
            gaps[w][y][j - 1] = block.norm();
            block.setZero();
          }
          ++j;
        }
      }
      runmax[w][y] = m;
    }
  });

  RandomHilbertResult out;
  out.ladder = ladder;
  out.estimate.statistic = "L2(mu) norm of sup_n ||S_n||";
  out.estimate.seed = law.seed();
  out.max_gaps.assign(samples, std::vector<double>(ladder.size() - 1, 0.0));
  for (std::size_t y = 0; y < samples; ++y) {
    KahanSum acc;
    for (std::size_t w = 0; w < P; ++w) {
      acc.add(runmax[w][y] * runmax[w][y]);
      for (std::size_t j = 0; j + 1 < ladder.size(); ++j) out.max_gaps[y][j] = std::max(out.max_gaps[y][j], gaps[w][y][j]);
    }
    out.estimate.values.push_back(std::sqrt(acc.value() * space.weight()));
  }
  for (std::size_t y = 0; y < samples; ++y) {
    for (std::size_t w = 0; w < P; ++w) out.point_gaps.push_back(gaps[w][y]);
  }
  out.estimate.extra["law"] = law.describe();
  out.estimate.extra["points"] = P;
  return out;
}

inline constexpr const char* kConsistent = "consistent-with-convergence";
inline constexpr const char* kInconsistent = "inconsistent";
inline constexpr const char* kIndeterminate = "indeterminate";

struct AeDiagnostic {
  std::vector<index_t> ladder;
  std::vector<double> gap_q90;  ///< 0.9-quantile over points of the gap ladder[j] -> ladder[j+1]
  std::vector<double> gap_max;
  double exponent = std::numeric_limits<double>::quiet_NaN();  ///< least-squares slope of log gap vs log n
  bool monotone_tail = false;
  std::string verdict = kIndeterminate;

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t j = 0; j < gap_q90.size(); ++j) {
      rows.push_back({{"from", ladder[j]}, {"to", ladder[j + 1]}, {"gap_q90", gap_q90[j]}, {"gap_max", gap_max[j]}});
    }
    nlohmann::json j{{"verdict", verdict}, {"monotone_tail", monotone_tail}, {"gaps", rows}};
    j["fitted_exponent"] = std::isfinite(exponent) ? nlohmann::json(exponent) : nlohmann::json(nullptr);
    return j;
  }
};

/*!
  Cauchy-gap decay over sample points. point_gaps[i][j] is the gap at point i
  between ladder[j] and ladder[j+1]. Verdict: consistent when the quantile
  gaps decrease strictly over the last 4 ladder entries and the fitted
  exponent is negative; inconsistent when the gaps do not decay (exponent
  above -0.05); indeterminate otherwise.
*/
[[nodiscard]] inline AeDiagnostic ae_convergence_diag(const std::vector<std::vector<double>>& point_gaps,
                                                      std::vector<index_t> ladder) {
  std::sort(ladder.begin(), ladder.end());
  AeDiagnostic out;
  out.ladder = ladder;
  if (ladder.size() < 2 || point_gaps.empty()) return out;
  const std::size_t J = ladder.size() - 1;
  for (const auto& row : point_gaps) {
    if (row.size() != J) throw DomainError("gap rows must have one entry per consecutive ladder pair");
  }
  for (std::size_t j = 0; j < J; ++j) {
    std::vector<double> col;
    double m = 0.0;
    for (const auto& row : point_gaps) {
      col.push_back(row[j]);
      m = std::max(m, row[j]);
    }
    out.gap_q90.push_back(quantile(col, 0.9));
    out.gap_max.push_back(m);
  }
  if (std::all_of(out.gap_max.begin(), out.gap_max.end(), [](double v) { return v == 0.0; })) {
    out.monotone_tail = true;
    out.exponent = -std::numeric_limits<double>::infinity();
    out.verdict = kConsistent;
    return out;
  }
  // Least squares on the positive gaps.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t cnt = 0;
  for (std::size_t j = 0; j < J; ++j) {
    if (!(out.gap_q90[j] > 0.0)) continue;
    const double x = std::log(static_cast<double>(ladder[j + 1])), y = std::log(out.gap_q90[j]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  if (cnt >= 2) {
    const double den = static_cast<double>(cnt) * sxx - sx * sx;
    if (den > 0.0) out.exponent = (static_cast<double>(cnt) * sxy - sx * sy) / den;
  }
  const std::size_t tail = std::min<std::size_t>(4, J);
  out.monotone_tail = tail >= 2;
  for (std::size_t j = J - tail + 1; j < J; ++j) {
    if (!(out.gap_q90[j] < out.gap_q90[j - 1])) out.monotone_tail = false;
  }
  if (out.monotone_tail && out.exponent < 0.0) {
    out.verdict = kConsistent;
  } else if (!(out.exponent < -0.05)) {
    out.verdict = kInconsistent;
  } else {
    out.verdict = kIndeterminate;
  }
  return out;
}

/// Same diagnostic from partial sums at the ladder: sums[i][j] is S_{ladder[j]} at point i.
[[nodiscard]] inline AeDiagnostic ae_convergence_diag_from_sums(const std::vector<std::vector<cplx>>& sums,
                                                                const std::vector<index_t>& ladder) {
  std::vector<std::vector<double>> gaps;
  for (const auto& row : sums) {
    std::vector<double> g;
    for (std::size_t j = 0; j + 1 < row.size(); ++j) g.push_back(std::abs(row[j + 1] - row[j]));
    gaps.push_back(std::move(g));
  }
  return ae_convergence_diag(gaps, ladder);
}

}  // namespace ergolab
