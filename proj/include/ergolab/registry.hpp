#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ergolab/admissibility.hpp"
#include "ergolab/config.hpp"

namespace ergolab {

/// A verdict the example is known to produce for one condition.
struct Expectation {
  std::string kind;
  Verdict verdict = Verdict::converges;
};

/// Operands of a run, built from an example id or from explicit weight text.
struct Problem {
  std::optional<WeightSeq> G;
  std::optional<WeightSeq> W;
  Schedule sched = Schedule::identity();
  GapSeq xi = GapSeq::derived();
  std::optional<WeightSeq> W_unit;  ///< the delta = 1 weight n^{1/p} G of E7
  std::string label;
};

struct ExampleEntry {
  std::string id;
  std::string label;
  RunConfig config;
  std::vector<Expectation> expected;
};

inline const std::vector<std::string>& example_ids() {
  static const std::vector<std::string> ids{"E0", "E1", "E2", "E3", "E4", "E5", "E6", "E7", "EwA"};
  return ids;
}

/// G_n = sqrt(n(n+1)/2), the norm of f_1 + ... + f_n for orthogonal f_k with ||f_k||^2 = k.
[[nodiscard]] inline WeightSeq ewa_G() {
  return WeightSeq::custom(
      "sqrt(n(n+1)/2)",
      [](index_t n) {
        const double x = static_cast<double>(n);
        return std::sqrt(x * (x + 1.0) / 2.0);
      },
      WeightExpr::power(1.0, 1.0 / std::numbers::sqrt2), 1);
}

/// W_n = n^{(1+eps)/4} sqrt(n(n+1)).
[[nodiscard]] inline WeightSeq ewa_W(double eps) {
  const double e = (1.0 + eps) / 4.0;
  return WeightSeq::custom(
      "n^" + detail::format_double(e) + " * sqrt(n(n+1))",
      [e](index_t n) {
        const double x = static_cast<double>(n);
        return std::pow(x, e) * std::sqrt(x * (x + 1.0));
      },
      WeightExpr::power(e + 1.0), 1);
}

namespace detail {

inline double boundary_delta(double p, double beta) { return (p - 1.0) * beta / p; }

inline bool is_example(const std::string& id) {
  for (const auto& e : example_ids()) {
    if (e == id) return true;
  }
  return false;
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

inline WeightExpr expr_of(double a, double b, double c) { return WeightExpr{1.0, a, b, c, 0.0}; }

}  // namespace detail

/*!
  Fills the example's parameters that the config leaves unset with their
  defaults (p = 2, beta = 0.5, gamma = 1, alpha = 1 for E3/E6 and 0.75 for
  E7, eps = 0.5, delta = 0.8 of the admissibility boundary) and validates
  them. Configs without an example are returned unchanged.
*/
[[nodiscard]] inline RunConfig resolve_example(RunConfig c) {
  if (!c.example) return c;
  const std::string& id = *c.example;
  if (!detail::is_example(id)) throw ParseError("unknown example '" + id + "'", 0);
  detail::require(c.p > 1.0 && std::isfinite(c.p), "examples need p > 1");
  const auto set = [](std::optional<double>& v, double d) {
    if (!v) v = d;
  };
  if (id == "EwA") {
    set(c.eps, 0.5);
    detail::require(*c.eps > 0.0 && *c.eps < 1.0, "EwA needs 0 < eps < 1");
    return c;
  }
  set(c.beta, 0.5);
  detail::require(*c.beta > 0.0, id + " needs beta > 0");
  if (id == "E0" || id == "E2" || id == "E4" || id == "E7") {
    set(c.gamma, 1.0);
    if (id == "E4") {
      detail::require(*c.gamma > 0.0, "E4 needs gamma > 0");
    } else {
      detail::require(*c.gamma >= 1.0, id + " needs gamma >= 1");
    }
  }
  if (id == "E1" || id == "E2" || id == "E3" || id == "E5" || id == "E6") {
    detail::require(*c.beta <= 1.0, id + " needs beta in (0, 1]");
    set(c.delta, 0.8 * detail::boundary_delta(c.p, *c.beta));
    detail::require(*c.delta >= 0.0, id + " needs delta >= 0");
  }
  if (id == "E3" || id == "E6") {
    set(c.alpha, 1.0);
    detail::require(*c.alpha >= 1.0, id + " needs alpha >= 1");
  }
  if (id == "E4") {
    set(c.eps, 0.5);
    detail::require(*c.eps > 0.0, "E4 needs eps > 0");
  }
  if (id == "E7") {
    set(c.alpha, 0.75);
    detail::require(*c.alpha > 0.0 && *c.alpha <= 1.0, "E7 needs alpha in (0, 1]");
    set(c.delta, c.p * (1.0 - *c.alpha) + 1.0);
    detail::require(*c.delta > 0.0, "E7 needs delta > 0");
  }
  return c;
}

/*!
  Builds G, W, the schedule and the gap sequence. Example weights come
  first; explicit G / W / schedule / xi text in the config overrides them.
*/
[[nodiscard]] inline Problem build_problem(const RunConfig& raw) {
  const RunConfig c = resolve_example(raw);
  Problem pr;
  const double p = c.p;
  if (c.example) {
    const std::string& id = *c.example;
    pr.label = id;
    if (id == "EwA") {
      pr.G = ewa_G();
      pr.W = ewa_W(*c.eps);
      pr.sched = Schedule::power(2.0, Schedule::Rounding::floor);
      pr.xi = GapSeq::increments(*pr.G);
    } else {
      const double beta = *c.beta;
      if (id == "E0" || id == "E7") {
        const WeightExpr g = detail::expr_of(0.0, beta + 1.0 / p, *c.gamma);
        pr.G = WeightSeq::from_expr(g);
        pr.W_unit = WeightSeq::from_expr(g * WeightExpr::power(1.0 / p));
        if (id == "E0") {
          pr.W = pr.W_unit;
          pr.sched = Schedule::superexp();
          pr.xi = GapSeq::of_schedule(WeightExpr::power(1.0 / p));
        } else {
          pr.W = WeightSeq::from_expr(g * WeightExpr::power(*c.delta / p));
          pr.sched = Schedule::power(1.0 / *c.alpha);
        }
      } else if (id == "E1" || id == "E5") {
        pr.G = WeightSeq::from_expr(WeightExpr::power(1.0 - beta));
        pr.W = WeightSeq::from_expr(WeightExpr::power(1.0 - *c.delta));
        pr.sched = Schedule::power(1.0 / beta);
      } else if (id == "E2") {
        pr.G = WeightSeq::from_expr(detail::expr_of(1.0 - beta, *c.gamma, 0.0));
        pr.W = WeightSeq::from_expr(detail::expr_of(1.0 - *c.delta, *c.gamma, 0.0));
        pr.sched = Schedule::power(1.0 / beta);
      } else if (id == "E3" || id == "E6") {
        if (beta >= 1.0) {
          throw WeightError(id + ": R_n = ln(n)^-alpha is decreasing at beta = 1, not a weight");
        }
        pr.G = WeightSeq::from_expr(detail::expr_of(1.0 - beta, -*c.alpha, 0.0));
        pr.W = WeightSeq::from_expr(detail::expr_of(1.0 - *c.delta, -*c.alpha, 0.0));
        pr.sched = Schedule::power(1.0 / beta);
      } else if (id == "E4") {
        const double eps = *c.eps;
        const WeightExpr base = detail::expr_of(1.0 / p, beta + 1.0 / p, *c.gamma);
        pr.G = WeightSeq::from_expr(base.pow(1.0 / eps));
        pr.W = WeightSeq::from_expr(base.pow((1.0 + eps) / eps));
        pr.sched = Schedule::weight_driven(*pr.G);
      }
    }
  }
  if (c.G) pr.G = WeightSeq::parse(*c.G);
  if (c.W) pr.W = weight_with_G(*c.W, pr.G);
  if (c.schedule) pr.sched = parse_schedule(*c.schedule, pr.G ? &*pr.G : nullptr);
  if (c.xi) pr.xi = parse_gaps(*c.xi, pr.G ? &*pr.G : nullptr);
  if (pr.label.empty()) pr.label = "custom";
  return pr;
}

/*!
  Verdicts stated for an example at the resolved parameters; nullopt when
  the parameters lie outside the example's hypotheses. E1 at the boundary
  delta = (p-1) beta / p is included: both (W3) and (W4) reach the class
  k^-1 and diverge.
*/
[[nodiscard]] inline std::optional<std::vector<Expectation>> expected_verdicts(const RunConfig& raw) {
  const RunConfig c = resolve_example(raw);
  if (!c.example) return std::nullopt;
  const std::string& id = *c.example;
  const auto conv = [](const char* k) { return Expectation{k, Verdict::converges}; };
  const auto div = [](const char* k) { return Expectation{k, Verdict::diverges}; };
  if (id == "EwA") return std::vector<Expectation>{conv("W1"), conv("W2"), div("W1-full"), conv("T21"), div("RRR-divergence")};
  if (id == "E0") return std::vector<Expectation>{conv("W1"), conv("W2"), div("W1-full"), conv("E01a"), conv("E01b")};
  if (id == "E4") return std::vector<Expectation>{conv("EW3"), conv("W3"), conv("W4")};
  if (id == "E7") {
    if (!(*c.delta >= c.p * (1.0 - *c.alpha) + 1.0) || *c.alpha >= 1.0) return std::nullopt;
    return std::vector<Expectation>{conv("W3"), conv("W4"), conv("T21"), conv("T21[delta=1]"), div("RRR-divergence")};
  }
  const double edge = detail::boundary_delta(c.p, *c.beta);
  const double d = *c.delta;
  if (id == "E1" && std::abs(d - edge) <= 1e-12) return std::vector<Expectation>{div("W3"), div("W4")};
  if (d >= edge) return std::nullopt;
  std::vector<Expectation> out{conv("W3"), conv("W4")};
  if (id == "E5" || id == "E6") {
    out.push_back(conv("T21"));
    out.push_back(div("RRR-divergence"));
  }
  return out;
}

/// The registered instances: parameter sweeps over every example.
[[nodiscard]] inline std::vector<ExampleEntry> example_registry() {
  std::vector<ExampleEntry> out;
  const double p = 2.0;
  const auto add = [&](const std::string& id, const std::string& label, RunConfig c,
                       std::optional<std::vector<Expectation>> expected = std::nullopt) {
    c.example = id;
    c.p = p;
    c = resolve_example(c);
    ExampleEntry e{id, label, c, {}};
    if (expected) {
      e.expected = *expected;
    } else if (auto v = expected_verdicts(c)) {
      e.expected = *v;
    } else {
      throw DomainError("registry instance " + label + " has no expected verdicts");
    }
    out.push_back(std::move(e));
  };
  const auto fmt = detail::format_double;
  const std::vector<double> betas{0.25, 0.5, 1.0};
  for (double b : betas) {
    RunConfig c;
    c.beta = b;
    c.gamma = 1.0;
    add("E0", "E0 beta=" + fmt(b) + " gamma=1", c);
  }
  for (const char* id : {"E1", "E2", "E5"}) {
    for (double b : betas) {
      RunConfig c;
      c.beta = b;
      if (std::string(id) == "E2") c.gamma = 1.0;
      add(id, std::string(id) + " beta=" + fmt(b), c);
    }
  }
  for (double b : betas) {
    RunConfig c;
    c.beta = b;
    c.delta = detail::boundary_delta(p, b);
    add("E1", "E1 boundary beta=" + fmt(b), c);
  }
  for (const char* id : {"E3", "E6"}) {
    for (double b : {0.25, 0.5}) {
      RunConfig c;
      c.beta = b;
      c.alpha = 1.0;
      add(id, std::string(id) + " beta=" + fmt(b) + " alpha=1", c);
    }
  }
  for (double eps : {0.25, 0.5}) {
    for (double b : betas) {
      RunConfig c;
      c.beta = b;
      c.gamma = 1.0;
      c.eps = eps;
      add("E4", "E4 beta=" + fmt(b) + " eps=" + fmt(eps), c);
    }
  }
  for (double b : betas) {
    RunConfig c;
    c.beta = b;
    c.gamma = 1.0;
    add("E7", "E7 beta=" + fmt(b) + " gamma=1", c);
  }
  for (double eps : {0.25, 0.5, 0.75}) {
    RunConfig c;
    c.eps = eps;
    add("EwA", "EwA eps=" + fmt(eps), c);
  }
  return out;
}

/// Parses "converges" / "diverges" / "unknown".
[[nodiscard]] inline Verdict parse_verdict(const std::string& s) {
  if (s == "converges") return Verdict::converges;
  if (s == "diverges") return Verdict::diverges;
  if (s == "unknown") return Verdict::unknown;
  throw ParseError("unknown verdict '" + s + "'", 0);
}

inline const std::vector<std::string>& condition_kinds() {
  static const std::vector<std::string> kinds{"W1",  "W2",   "W1-full", "W3",   "W4",  "T21",      "T21[delta=1]",
                                              "T72", "T73",  "T322",    "E01a", "E01b", "EW3", "RT1gamma", "RRR-divergence"};
  return kinds;
}

/// Evaluates one condition on the problem; parameters come from the resolved config.
[[nodiscard]] inline AdmissibilityReport run_condition(const std::string& kind, const Problem& pr, const RunConfig& c,
                                                       const Ladder& ladder) {
  const auto needG = [&]() -> const WeightSeq& {
    if (!pr.G) throw DomainError(kind + " needs a G weight");
    return *pr.G;
  };
  const auto needW = [&]() -> const WeightSeq& {
    if (!pr.W) throw DomainError(kind + " needs a W weight");
    return *pr.W;
  };
  const auto needParam = [&](const std::optional<double>& v, const char* name) {
    if (!v) throw DomainError(kind + " needs --" + std::string(name));
    return *v;
  };
  if (kind == "W1") return check_ratio_along("W1", needW(), needG(), pr.sched, c.p, ladder);
  if (kind == "W2") return check_gap_along("W2", needW(), pr.sched, pr.xi, c.p, ladder);
  if (kind == "W3") return check_ratio_along("W3", needW(), needG(), pr.sched, c.p, ladder);
  if (kind == "W4") return check_gap_along("W4", needW(), pr.sched, GapSeq::derived(), c.p, ladder);
  if (kind == "W1-full") return check_full_sum(needW(), needG(), c.p, ladder);
  if (kind == "T21") return check_T21(needG(), needW(), ladder);
  if (kind == "T21[delta=1]") {
    if (!pr.W_unit) throw DomainError("T21[delta=1] is defined for E7 only");
    return check_T21(needG(), *pr.W_unit, ladder, "T21[delta=1]");
  }
  if (kind == "T72") return check_T72(needG(), needW(), ladder);
  if (kind == "T73") return check_T73(needW(), needParam(c.beta, "beta"), ladder);
  if (kind == "T322") return check_T322(parse_modulation(c.modulation.value_or("one"), c.seed), needG(), needW(), ladder);
  if (kind == "E01a") return check_E01(needG(), pr.sched, c.p, ladder).first;
  if (kind == "E01b") return check_E01(needG(), pr.sched, c.p, ladder).second;
  if (kind == "EW3") return check_EW3(needG(), c.p, needParam(c.eps, "eps"), ladder);
  if (kind == "RT1gamma") return check_1RT1(needG(), pr.sched, needParam(c.alpha, "alpha"), ladder);
  if (kind == "RRR-divergence" || kind == "RRR") return check_rrr(needG(), needW(), ladder);
  throw ParseError("unknown condition '" + kind + "'", 0);
}

}  // namespace ergolab
