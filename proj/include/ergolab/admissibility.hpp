#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ergolab/bertrand.hpp"
#include "ergolab/hash.hpp"
#include "ergolab/modulation.hpp"
#include "ergolab/schedule.hpp"
#include "ergolab/weight.hpp"

namespace ergolab {

/// Verdict and evidence for one summability condition.
struct AdmissibilityReport {
  std::string kind;
  nlohmann::json params = nlohmann::json::object();
  Verdict verdict = Verdict::unknown;
  VerdictSource source = VerdictSource::numeric_heuristic;
  std::vector<std::pair<index_t, double>> partial_sums;
  std::optional<double> tail_bound;
  std::optional<WeightExpr> comparison_class;
  Verdict numeric_verdict = Verdict::unknown;
  bool capped = false;
  std::optional<double> value;  ///< the series value, when the condition defines one
  std::string note;

  /// Symbolic and numeric verdicts do not contradict each other.
  [[nodiscard]] bool numeric_agrees() const {
    if (source != VerdictSource::symbolic) return true;
    return !((verdict == Verdict::converges && numeric_verdict == Verdict::diverges) ||
             (verdict == Verdict::diverges && numeric_verdict == Verdict::converges));
  }

  [[nodiscard]] bool converges() const { return verdict == Verdict::converges; }
  [[nodiscard]] bool diverges() const { return verdict == Verdict::diverges; }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j;
    j["kind"] = kind;
    j["params"] = params;
    j["verdict"] = to_string(verdict);
    j["verdict_source"] = to_string(source);
    nlohmann::json ps = nlohmann::json::array();
    for (const auto& [K, S] : partial_sums) ps.push_back({K, S});
    j["partial_sums"] = ps;
    if (comparison_class) {
      j["class"] = {comparison_class->a, comparison_class->b, comparison_class->c};
      j["class_scale"] = comparison_class->scale;
      if (comparison_class->superexp != 0.0) j["class_superexp"] = comparison_class->superexp;
    } else {
      j["class"] = nullptr;
    }
    j["tail_bound"] = tail_bound ? nlohmann::json(*tail_bound) : nlohmann::json(nullptr);
    j["numeric_verdict"] = to_string(numeric_verdict);
    j["numeric_agrees"] = numeric_agrees();
    j["ladder_capped"] = capped;
    if (value) j["value"] = *value;
    if (!note.empty()) j["note"] = note;
    return j;
  }

  /// Digest of the serialized report, used to tie estimates to their preconditions.
  [[nodiscard]] std::string hash() const { return hex64(fnv1a64(to_json().dump())); }
};

namespace detail {

inline bool is_zero_class(const std::optional<WeightExpr>& c) { return c && c->scale == 0.0; }

inline AdmissibilityReport build_report(std::string kind, nlohmann::json params,
                                        const std::function<double(index_t)>& term, index_t first,
                                        index_t last_available, std::optional<WeightExpr> cls, const Ladder& ladder,
                                        std::string note = {}) {
  AdmissibilityReport rep;
  rep.kind = std::move(kind);
  rep.params = std::move(params);
  rep.note = std::move(note);
  const SeriesDiagnostics d = sum_series(term, first, last_available, ladder);
  rep.partial_sums = d.partial_sums;
  rep.numeric_verdict = d.numeric;
  rep.capped = d.capped;
  if (is_zero_class(cls)) {
    rep.verdict = Verdict::converges;
    rep.source = VerdictSource::symbolic;
    rep.comparison_class = cls;
    rep.tail_bound = 0.0;
    rep.value = d.partial_sums.empty() ? 0.0 : d.partial_sums.back().second;
    return rep;
  }
  if (cls) {
    rep.comparison_class = cls;
    rep.source = VerdictSource::symbolic;
    rep.verdict = bertrand(*cls);
    if (rep.verdict == Verdict::converges && d.last_index >= 16) {
      rep.tail_bound = class_tail_integral(*cls, static_cast<double>(d.last_index));
    }
  } else {
    rep.source = VerdictSource::numeric_heuristic;
    rep.verdict = Verdict::unknown;
  }
  if (!d.partial_sums.empty()) rep.value = d.partial_sums.back().second;
  return rep;
}

inline index_t first_schedule_index(const Schedule& s, index_t n0) { return s.first_index_at_least(n0); }

inline std::optional<WeightExpr> composed_class(const WeightSeq& w, const Schedule& s) {
  if (!w.asymptotic()) return std::nullopt;
  return asymptotic_class(*w.asymptotic(), s);
}

inline std::optional<WeightExpr> ratio_class(const std::optional<WeightExpr>& num, const std::optional<WeightExpr>& den,
                                             double p) {
  if (!num || !den) return std::nullopt;
  return (*num / *den).pow(p);
}

inline void require_p(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("condition needs p > 1");
}

// For weight-driven schedules, sum_k h(n_k) <= sum_n h(n) (terms >= 0).
inline std::optional<WeightExpr> dominated_class(const std::optional<WeightExpr>& cls_n, std::string& note) {
  if (!cls_n) return std::nullopt;
  if (bertrand(*cls_n) != Verdict::converges) {
    note = "weight-driven schedule: full sum over n diverges, no symbolic verdict";
    return std::nullopt;
  }
  note = "weight-driven schedule: dominated by the convergent full sum over n";
  return cls_n;
}

/// Class of 1 - W_n/W_{n+1} (log-derivative of the leading factor of W).
inline std::optional<WeightExpr> log_derivative_class(const WeightExpr& w) {
  if (w.superexp != 0.0) return std::nullopt;
  if (w.a > 0.0) return WeightExpr::power(-1.0, w.a);
  if (w.a < 0.0) return std::nullopt;
  if (w.b > 0.0) return WeightExpr{w.b, -1.0, -1.0, 0.0, 0.0};
  if (w.b < 0.0) return std::nullopt;
  if (w.c > 0.0) return WeightExpr{w.c, -1.0, -1.0, -1.0, 0.0};
  if (w.c < 0.0) return std::nullopt;
  return WeightExpr::constant(0.0);
}

inline nlohmann::json base_params(const WeightSeq* W, const WeightSeq* G, const Schedule* s, std::optional<double> p) {
  nlohmann::json j = nlohmann::json::object();
  if (W) j["W"] = W->name();
  if (G) j["G"] = G->name();
  if (s) j["schedule"] = s->describe();
  if (p) j["p"] = *p;
  return j;
}

}  // namespace detail

/// (W1): sum_k (G_{n_k}/W_{n_k})^p.  Also (W3), which is the same series.
[[nodiscard]] inline AdmissibilityReport check_ratio_along(const std::string& kind, const WeightSeq& W,
                                                           const WeightSeq& G, const Schedule& sched, double p,
                                                           const Ladder& ladder = {}) {
  detail::require_p(p);
  std::optional<WeightExpr> cls;
  std::string note;
  if (sched.kind() == Schedule::Kind::weight_driven) {
    cls = detail::dominated_class(detail::ratio_class(G.asymptotic(), W.asymptotic(), p), note);
  } else {
    cls = detail::ratio_class(detail::composed_class(G, sched), detail::composed_class(W, sched), p);
  }
  const index_t first = detail::first_schedule_index(sched, std::max(W.n0(), G.n0()));
  auto term = [&](index_t k) {
    const index_t n = sched.at(k);
    return std::pow(G.value(n) / W.value(n), p);
  };
  return detail::build_report(kind, detail::base_params(&W, &G, &sched, p), term, first, sched.size(), cls, ladder,
                              note);
}

/// (W2): sum_k (xi_k/W_{n_k})^p.  With derived gaps this is (W4).
[[nodiscard]] inline AdmissibilityReport check_gap_along(const std::string& kind, const WeightSeq& W,
                                                         const Schedule& sched, const GapSeq& xi, double p,
                                                         const Ladder& ladder = {}) {
  detail::require_p(p);
  std::optional<WeightExpr> cls;
  std::string note;
  if (sched.kind() == Schedule::Kind::weight_driven) {
    if (xi.kind() == GapSeq::Kind::derived && sched.driver()->asymptotic()) {
      // n_{k+1} - n_k = floor(D_{n_k}) + 1 <= 2 D_{n_k}
      cls = detail::dominated_class(detail::ratio_class(sched.driver()->asymptotic(), W.asymptotic(), p), note);
      if (cls) cls = cls->scaled(std::pow(2.0, p));
    }
  } else {
    cls = detail::ratio_class(xi.asymptotic_class(sched), detail::composed_class(W, sched), p);
  }
  const index_t first = detail::first_schedule_index(sched, W.n0());
  const index_t last = xi.size(sched);
  auto term = [&](index_t k) { return std::pow(xi.at(k, sched) / W.value(sched.at(k)), p); };
  auto params = detail::base_params(&W, nullptr, &sched, p);
  params["xi"] = xi.describe();
  if (xi.kind() == GapSeq::Kind::explicit_list && xi.size(sched) < sched.size() && sched.kind() == Schedule::Kind::explicit_list) {
    throw DomainError("explicit gap list shorter than the explicit schedule");
  }
  return detail::build_report(kind, params, term, first, last, cls, ladder, note);
}

/// (W1)-(W2): weak p-admissibility of W with respect to G along the schedule.
[[nodiscard]] inline std::pair<AdmissibilityReport, AdmissibilityReport> check_weak_admissible(
    const WeightSeq& W, const WeightSeq& G, const Schedule& sched, const GapSeq& xi, double p,
    const Ladder& ladder = {}) {
  return {check_ratio_along("W1", W, G, sched, p, ladder), check_gap_along("W2", W, sched, xi, p, ladder)};
}

/// (W3)-(W4): p-admissibility; W is in W_p(G) iff both converge.
[[nodiscard]] inline std::pair<AdmissibilityReport, AdmissibilityReport> check_admissible(const WeightSeq& W,
                                                                                          const WeightSeq& G,
                                                                                          const Schedule& sched,
                                                                                          double p,
                                                                                          const Ladder& ladder = {}) {
  return {check_ratio_along("W3", W, G, sched, p, ladder),
          check_gap_along("W4", W, sched, GapSeq::derived(), p, ladder)};
}

/// sum_n (G_n/W_n)^p over all indices.
[[nodiscard]] inline AdmissibilityReport check_full_sum(const WeightSeq& W, const WeightSeq& G, double p,
                                                        const Ladder& ladder = {}) {
  return check_ratio_along("W1-full", W, G, Schedule::identity(), p, ladder);
}

/// (T21): sum_n (G_n/W_n)(1 - W_n/W_{n+1}).
[[nodiscard]] inline AdmissibilityReport check_T21(const WeightSeq& G, const WeightSeq& W, const Ladder& ladder = {},
                                                   const std::string& kind = "T21") {
  std::optional<WeightExpr> cls;
  if (G.asymptotic() && W.asymptotic()) {
    if (const auto d = detail::log_derivative_class(*W.asymptotic())) {
      cls = detail::is_zero_class(d) ? d : std::optional<WeightExpr>(*G.asymptotic() / *W.asymptotic() * *d);
    }
  }
  const index_t first = std::max(G.n0(), W.n0());
  auto term = [&](index_t n) { return G.value(n) / W.value(n) * W.one_minus_ratio(n); };
  return detail::build_report(kind, detail::base_params(&W, &G, nullptr, std::nullopt), term, first,
                              kScheduleCap - 1, cls, ladder);
}

/// Per-term (T21) quantity (G_n/W_n)(1 - W_n/W_{n+1}).
[[nodiscard]] inline double T21_term(const WeightSeq& G, const WeightSeq& W, index_t n) {
  return G.value(n) / W.value(n) * W.one_minus_ratio(n);
}

/// (T72): (T21) with the twisted weight G_{n,1} in place of G_n.
[[nodiscard]] inline AdmissibilityReport check_T72(const WeightSeq& G, const WeightSeq& W, const Ladder& ladder = {}) {
  return check_T21(TwistedWeight(G, 1.0).as_weight(), W, ladder, "T72");
}

/// (T73): sum_k 1/(k^beta W_k).
[[nodiscard]] inline AdmissibilityReport check_T73(const WeightSeq& W, double beta, const Ladder& ladder = {}) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("T73 needs beta > 0");
  std::optional<WeightExpr> cls;
  if (W.asymptotic()) cls = WeightExpr::power(-beta) / *W.asymptotic();
  auto term = [&](index_t k) { return 1.0 / (std::pow(static_cast<double>(k), beta) * W.value(k)); };
  auto params = detail::base_params(&W, nullptr, nullptr, std::nullopt);
  params["beta"] = beta;
  return detail::build_report("T73", params, term, W.n0(), kScheduleCap - 1, cls, ladder);
}

/// (T322): sum_k |a_k - a_{k+1}| G_k/W_k, with a read along n_k = k.
[[nodiscard]] inline AdmissibilityReport check_T322(const ModulationSeq& a, const WeightSeq& G, const WeightSeq& W,
                                                    const Ladder& ladder = {}) {
  std::optional<WeightExpr> cls;
  if (const auto inc = a.increment_class()) {
    if (inc->scale == 0.0) {
      cls = inc;
    } else if (G.asymptotic() && W.asymptotic()) {
      cls = *inc * (*G.asymptotic() / *W.asymptotic());
    }
  }
  const Schedule id = Schedule::identity();
  auto term = [&](index_t k) { return std::abs(a.at(k, id) - a.at(k + 1, id)) * G.value(k) / W.value(k); };
  auto params = detail::base_params(&W, &G, nullptr, std::nullopt);
  params["a"] = a.describe();
  return detail::build_report("T322", params, term, std::max(G.n0(), W.n0()), kScheduleCap - 1, cls, ladder);
}

/*!
  (rrr): sum_k G_k/W_k. Divergence is the desired outcome here: the
  "meaningful" flag in the params is set exactly when the series diverges.
*/
[[nodiscard]] inline AdmissibilityReport check_rrr(const WeightSeq& G, const WeightSeq& W, const Ladder& ladder = {}) {
  std::optional<WeightExpr> cls;
  if (G.asymptotic() && W.asymptotic()) cls = *G.asymptotic() / *W.asymptotic();
  auto term = [&](index_t k) { return G.value(k) / W.value(k); };
  auto rep = detail::build_report("RRR-divergence", detail::base_params(&W, &G, nullptr, std::nullopt), term,
                                  std::max(G.n0(), W.n0()), kScheduleCap - 1, cls, ladder);
  rep.params["meaningful"] = rep.verdict == Verdict::diverges;
  return rep;
}

/// Whether a (rrr) report puts the pair in the meaningful regime.
[[nodiscard]] inline bool meaningful_regime(const AdmissibilityReport& rrr) { return rrr.verdict == Verdict::diverges; }

/*!
  (1RT1): gamma = sum_k n_k^alpha / G_k^2. On convergence `value` holds the
  partial sum at the top of the ladder and `tail_bound` bounds the rest.
*/
[[nodiscard]] inline AdmissibilityReport check_1RT1(const WeightSeq& G, const Schedule& sched, double alpha,
                                                    const Ladder& ladder = {}) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("1RT1 needs alpha in (0,1)");
  std::optional<WeightExpr> cls;
  if (G.asymptotic()) {
    if (const auto nk = asymptotic_class(WeightExpr::power(alpha), sched)) cls = *nk / G.asymptotic()->pow(2.0);
  }
  auto term = [&](index_t k) {
    const double g = G.value(k);
    return std::pow(static_cast<double>(sched.at(k)), alpha) / (g * g);
  };
  auto params = detail::base_params(nullptr, &G, &sched, std::nullopt);
  params["alpha"] = alpha;
  return detail::build_report("RT1gamma", params, term, std::max<index_t>(1, G.n0()), sched.size(), cls, ladder);
}

/// (E01): sum_k 1/n_k and sum_k 1/G_{n_k}^p.
[[nodiscard]] inline std::pair<AdmissibilityReport, AdmissibilityReport> check_E01(const WeightSeq& G,
                                                                                   const Schedule& sched, double p,
                                                                                   const Ladder& ladder = {}) {
  detail::require_p(p);
  auto params = detail::base_params(nullptr, &G, &sched, p);
  auto a = detail::build_report(
      "E01a", params, [&](index_t k) { return 1.0 / static_cast<double>(sched.at(k)); }, 1, sched.size(),
      asymptotic_class(WeightExpr::power(-1.0), sched), ladder);
  std::optional<WeightExpr> cls;
  if (const auto g = detail::composed_class(G, sched)) cls = g->pow(-p);
  auto b = detail::build_report(
      "E01b", params, [&](index_t k) { return std::pow(G.value(sched.at(k)), -p); },
      detail::first_schedule_index(sched, G.n0()), sched.size(), cls, ladder);
  return {a, b};
}

/// (EW3): sum_k 1/G_k^{p eps}.
[[nodiscard]] inline AdmissibilityReport check_EW3(const WeightSeq& G, double p, double eps, const Ladder& ladder = {}) {
  detail::require_p(p);
  if (!(eps > 0.0)) throw DomainError("EW3 needs eps > 0");
  std::optional<WeightExpr> cls;
  if (G.asymptotic()) cls = G.asymptotic()->pow(-p * eps);
  auto params = detail::base_params(nullptr, &G, nullptr, p);
  params["eps"] = eps;
  return detail::build_report(
      "EW3", params, [&](index_t k) { return std::pow(G.value(k), -p * eps); }, G.n0(), kScheduleCap - 1, cls,
      ladder);
}

}  // namespace ergolab
