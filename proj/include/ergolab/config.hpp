#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ergolab/error.hpp"
#include "ergolab/hash.hpp"
#include "ergolab/modulation.hpp"
#include "ergolab/random_stream.hpp"
#include "ergolab/schedule.hpp"
#include "ergolab/weight.hpp"

namespace ergolab {

inline constexpr const char* kToolName = "ergolab";
inline constexpr const char* kToolVersion = "0.3.0";

/*!
  Everything one command needs. Keys of the JSON form are the long flag
  names of the command line, so a config file and a flag set are
  interchangeable. Optional fields are omitted from the JSON when unset.
*/
struct RunConfig {
  std::string command = "check";
  std::optional<std::string> example;
  std::optional<std::string> G, W, schedule, xi, modulation, field, law, check, stat, h;
  nlohmann::json op;  ///< operator spec; null when absent
  std::vector<std::string> conditions;
  double p = 2.0;
  std::optional<double> beta, eps, alpha, delta, gamma;
  std::vector<double> r;
  std::optional<std::string> ladder;
  std::optional<index_t> n_max;
  std::size_t grid = 0;  ///< lambda / circle grid size, 0 = automatic
  std::size_t samples = 64;
  std::size_t points = 256;
  std::size_t lambdas = 256;
  std::size_t fields = 20;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string out = "out";
  std::vector<std::string> expect;
  bool full_sequence = false;
  bool no_regime_check = false;
  bool allow_coarse = false;
  bool opnorm = false;
  bool ladder_1e7 = false;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    j["command"] = command;
    const auto put = [&](const char* key, const auto& v) {
      if (v) j[key] = *v;
    };
    put("example", example);
    put("G", G);
    put("W", W);
    put("schedule", schedule);
    put("xi", xi);
    put("modulation", modulation);
    put("field", field);
    put("law", law);
    put("check", check);
    put("stat", stat);
    put("h", h);
    if (!op.is_null()) j["operator"] = op;
    if (!conditions.empty()) j["conditions"] = conditions;
    j["p"] = p;
    put("beta", beta);
    put("eps", eps);
    put("alpha", alpha);
    put("delta", delta);
    put("gamma", gamma);
    if (!r.empty()) j["r"] = r;
    put("ladder", ladder);
    put("n-max", n_max);
    j["grid"] = grid;
    j["samples"] = samples;
    j["points"] = points;
    j["lambdas"] = lambdas;
    j["fields"] = fields;
    j["seed"] = seed;
    j["threads"] = threads;
    j["out"] = out;
    if (!expect.empty()) j["expect"] = expect;
    j["full-sequence"] = full_sequence;
    j["no-regime-check"] = no_regime_check;
    j["allow-coarse"] = allow_coarse;
    j["opnorm"] = opnorm;
    j["ladder-1e7"] = ladder_1e7;
    return j;
  }

  /// Reads a config object; unknown keys and wrong types are ParseErrors.
  [[nodiscard]] static RunConfig from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("config must be a JSON object", 0);
    RunConfig c;
    c.merge(j);
    return c;
  }

  /// Overwrites the fields present in `j`. The provenance keys of a written
  /// config.json (config_hash, tool_version) are skipped, so it can be rerun.
  void merge(const nlohmann::json& j) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const nlohmann::json& v = it.value();
      if (k == "config_hash" || k == "tool_version") continue;
      try {
        if (k == "command") command = v.get<std::string>();
        else if (k == "example") example = v.get<std::string>();
        else if (k == "G") G = v.get<std::string>();
        else if (k == "W") W = v.get<std::string>();
        else if (k == "schedule") schedule = v.get<std::string>();
        else if (k == "xi") xi = v.get<std::string>();
        else if (k == "modulation") modulation = v.get<std::string>();
        else if (k == "field") field = v.get<std::string>();
        else if (k == "law") law = v.get<std::string>();
        else if (k == "check") check = v.get<std::string>();
        else if (k == "stat") stat = v.get<std::string>();
        else if (k == "h") h = v.get<std::string>();
        else if (k == "operator") op = v.is_string() ? nlohmann::json::parse(v.get<std::string>()) : v;
        else if (k == "conditions") conditions = v.get<std::vector<std::string>>();
        else if (k == "p") p = v.get<double>();
        else if (k == "beta") beta = v.get<double>();
        else if (k == "eps") eps = v.get<double>();
        else if (k == "alpha") alpha = v.get<double>();
        else if (k == "delta") delta = v.get<double>();
        else if (k == "gamma") gamma = v.get<double>();
        else if (k == "r") r = v.get<std::vector<double>>();
        else if (k == "ladder") ladder = v.get<std::string>();
        else if (k == "n-max") n_max = v.get<index_t>();
        else if (k == "grid") grid = v.get<std::size_t>();
        else if (k == "samples") samples = v.get<std::size_t>();
        else if (k == "points") points = v.get<std::size_t>();
        else if (k == "lambdas") lambdas = v.get<std::size_t>();
        else if (k == "fields") fields = v.get<std::size_t>();
        else if (k == "seed") seed = v.get<std::uint64_t>();
        else if (k == "threads") threads = v.get<unsigned>();
        else if (k == "out") out = v.get<std::string>();
        else if (k == "expect") expect = v.is_string() ? std::vector<std::string>{v.get<std::string>()} : v.get<std::vector<std::string>>();
        else if (k == "full-sequence") full_sequence = v.get<bool>();
        else if (k == "no-regime-check") no_regime_check = v.get<bool>();
        else if (k == "allow-coarse") allow_coarse = v.get<bool>();
        else if (k == "opnorm") opnorm = v.get<bool>();
        else if (k == "ladder-1e7") ladder_1e7 = v.get<bool>();
        else throw ParseError("unknown config key '" + k + "'", 0);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError("config key '" + k + "': " + e.what(), 0);
      }
    }
  }

  /// Digest of the canonical form (sorted keys), excluding `threads` and `out`.
  [[nodiscard]] std::string hash() const {
    nlohmann::json j = to_json();
    j.erase("threads");
    j.erase("out");
    return hex64(fnv1a64(j.dump()));
  }
};

namespace detail {

/// Splits "kind:a:b" at the first colon; `rest_at` is the byte offset of the argument part.
struct SpecParts {
  std::string_view kind;
  std::string_view rest;
  std::size_t rest_at = 0;
  bool has_rest = false;
};

inline SpecParts split_spec(std::string_view text) {
  SpecParts p;
  const auto c = text.find(':');
  p.kind = text.substr(0, c);
  if (c != std::string_view::npos) {
    p.rest = text.substr(c + 1);
    p.rest_at = c + 1;
    p.has_rest = true;
  }
  return p;
}

inline double parse_number(std::string_view s, std::size_t at) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (b != e && *b == '+') ++b;
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e || !std::isfinite(v)) throw ParseError("expected a number", at);
  return v;
}

inline index_t parse_count(std::string_view s, std::size_t at) {
  const double v = parse_number(s, at);
  if (!(v >= 1.0) || v != std::floor(v) || v > 9.2e18) throw ParseError("expected a positive integer", at);
  return static_cast<index_t>(v);
}

/// Comma-separated items with their offsets.
inline std::vector<std::pair<std::string_view, std::size_t>> split_list(std::string_view s, std::size_t at, char sep = ',') {
  std::vector<std::pair<std::string_view, std::size_t>> out;
  std::size_t start = 0;
  while (true) {
    const auto c = s.find(sep, start);
    const auto item = s.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start);
    if (item.empty()) throw ParseError("empty list item", at + start);
    out.emplace_back(item, at + start);
    if (c == std::string_view::npos) break;
    start = c + 1;
  }
  return out;
}

inline void require_rest(const SpecParts& p, std::size_t at_end) {
  if (!p.has_rest || p.rest.empty()) throw ParseError("'" + std::string(p.kind) + "' needs an argument", at_end);
}

}  // namespace detail

/*!
  Ladder text: "standard" (10^2..10^6), "dyadic:A:B" (2^A..2^B),
  "decade:A:B" (10^A..10^B) or an explicit list "64,128,300".
  Returns the sorted, deduplicated points.
*/
[[nodiscard]] inline std::vector<index_t> parse_ladder(std::string_view text) {
  std::vector<index_t> out;
  const auto p = detail::split_spec(text);
  if (p.kind == "standard" && !p.has_rest) {
    out = Ladder::standard().points;
  } else if (p.kind == "dyadic" || p.kind == "decade") {
    detail::require_rest(p, text.size());
    const auto parts = detail::split_list(p.rest, p.rest_at, ':');
    if (parts.size() != 2) throw ParseError("expected two exponents 'A:B'", p.rest_at);
    const index_t lo = static_cast<index_t>(detail::parse_number(parts[0].first, parts[0].second));
    const index_t hi = static_cast<index_t>(detail::parse_number(parts[1].first, parts[1].second));
    const index_t base = p.kind == "dyadic" ? 2 : 10;
    const index_t cap = p.kind == "dyadic" ? 62 : 18;
    if (lo > hi || hi > cap) throw ParseError("exponent range out of bounds", p.rest_at);
    for (index_t e = lo; e <= hi; ++e) {
      index_t v = 1;
      for (index_t i = 0; i < e; ++i) v *= base;
      out.push_back(v);
    }
  } else if (!text.empty() && (std::isdigit(static_cast<unsigned char>(text.front())) != 0)) {
    for (const auto& [item, at] : detail::split_list(text, 0)) out.push_back(detail::parse_count(item, at));
  } else {
    throw ParseError("unknown ladder '" + std::string(text) + "'", 0);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Powers of two from 2^lo up to n_max, with n_max itself appended when it is not one.
[[nodiscard]] inline std::vector<index_t> dyadic_ladder(index_t n_max, int lo = 6) {
  std::vector<index_t> out;
  for (index_t v = index_t{1} << lo; v <= n_max; v <<= 1) out.push_back(v);
  if (out.empty() || out.back() != n_max) out.push_back(n_max);
  return out;
}

/*!
  Schedule text: identity, power:R (floor(k^R)+1), power-floor:R (floor(k^R)),
  superexp, geometric:Q, explicit:n1,n2,..., weight-driven (driven by G).
*/
[[nodiscard]] inline Schedule parse_schedule(std::string_view text, const WeightSeq* G = nullptr) {
  const auto p = detail::split_spec(text);
  try {
    if (p.kind == "identity" && !p.has_rest) return Schedule::identity();
    if (p.kind == "superexp" && !p.has_rest) return Schedule::superexp();
    if (p.kind == "weight-driven" && !p.has_rest) {
      if (!G) throw ParseError("weight-driven schedule needs a G weight", 0);
      return Schedule::weight_driven(*G);
    }
    if (p.kind == "power" || p.kind == "power-floor") {
      detail::require_rest(p, text.size());
      const double r = detail::parse_number(p.rest, p.rest_at);
      return Schedule::power(r, p.kind == "power" ? Schedule::Rounding::floor_plus_one : Schedule::Rounding::floor);
    }
    if (p.kind == "geometric") {
      detail::require_rest(p, text.size());
      return Schedule::geometric(detail::parse_number(p.rest, p.rest_at));
    }
    if (p.kind == "explicit") {
      detail::require_rest(p, text.size());
      std::vector<index_t> v;
      for (const auto& [item, at] : detail::split_list(p.rest, p.rest_at)) v.push_back(detail::parse_count(item, at));
      return Schedule::explicit_list(std::move(v));
    }
  } catch (const DomainError& e) {
    throw ParseError(std::string("schedule: ") + e.what(), p.rest_at);
  }
  throw ParseError("unknown schedule '" + std::string(text) + "'", 0);
}

/// Gap text: derived, expr:<weight expression>, increments (of G), explicit:x1,x2,...
[[nodiscard]] inline GapSeq parse_gaps(std::string_view text, const WeightSeq* G = nullptr) {
  const auto p = detail::split_spec(text);
  if (p.kind == "derived" && !p.has_rest) return GapSeq::derived();
  if (p.kind == "increments" && !p.has_rest) {
    if (!G) throw ParseError("increment gaps need a G weight", 0);
    return GapSeq::increments(*G);
  }
  if (p.kind == "expr") {
    detail::require_rest(p, text.size());
    try {
      return GapSeq::of_schedule(parse_weight(p.rest));
    } catch (const ParseError& e) {
      throw ParseError("gap expression", p.rest_at + e.offset());
    }
  }
  if (p.kind == "explicit") {
    detail::require_rest(p, text.size());
    std::vector<double> v;
    for (const auto& [item, at] : detail::split_list(p.rest, p.rest_at)) v.push_back(detail::parse_number(item, at));
    try {
      return GapSeq::explicit_list(std::move(v));
    } catch (const DomainError& e) {
      throw ParseError(e.what(), p.rest_at);
    }
  }
  throw ParseError("unknown gap sequence '" + std::string(text) + "'", 0);
}

/*!
  Modulation text: one, zero, const:C, rotation:T (lambda = e^{2 pi i T}),
  alternating (= rotation:0.5), twist:R, power:C:E, chirp:PHI,
  explicit:a1,a2,..., random:LAW (sample 0 of the seeded stream).
*/
[[nodiscard]] inline ModulationSeq parse_modulation(std::string_view text, std::uint64_t seed = 1);

/// Law text: rademacher, gaussian, complex-gaussian, zero, deterministic:v1,v2,...
[[nodiscard]] inline RandomStream parse_law(std::string_view text, std::uint64_t seed) {
  const auto p = detail::split_spec(text);
  if (!p.has_rest) {
    if (p.kind == "rademacher") return RandomStream(RandomStream::Law::rademacher, seed);
    if (p.kind == "gaussian") return RandomStream(RandomStream::Law::gaussian, seed);
    if (p.kind == "complex-gaussian") return RandomStream(RandomStream::Law::complex_gaussian, seed);
    if (p.kind == "zero") return RandomStream(RandomStream::Law::zero, seed);
  }
  if (p.kind == "deterministic") {
    detail::require_rest(p, text.size());
    std::vector<cplx> v;
    for (const auto& [item, at] : detail::split_list(p.rest, p.rest_at)) v.emplace_back(detail::parse_number(item, at), 0.0);
    return RandomStream::deterministic(std::move(v));
  }
  throw ParseError("unknown law '" + std::string(text) + "'", 0);
}

inline ModulationSeq parse_modulation(std::string_view text, std::uint64_t seed) {
  const auto p = detail::split_spec(text);
  const auto arg = [&] {
    detail::require_rest(p, text.size());
    return detail::parse_number(p.rest, p.rest_at);
  };
  try {
    if (p.kind == "one" && !p.has_rest) return ModulationSeq::constant(1.0);
    if (p.kind == "zero" && !p.has_rest) return ModulationSeq::zero();
    if (p.kind == "alternating" && !p.has_rest) return ModulationSeq::rotation(UnitPoint::from_turns(0.5));
    if (p.kind == "const") return ModulationSeq::constant(arg());
    if (p.kind == "rotation") return ModulationSeq::rotation(UnitPoint::from_turns(arg()));
    if (p.kind == "twist") return ModulationSeq::twist(arg());
    if (p.kind == "chirp") return ModulationSeq::chirp(arg());
    if (p.kind == "power") {
      detail::require_rest(p, text.size());
      const auto parts = detail::split_list(p.rest, p.rest_at, ':');
      if (parts.size() != 2) throw ParseError("expected 'power:C:E'", p.rest_at);
      return ModulationSeq::power(detail::parse_number(parts[0].first, parts[0].second),
                                  detail::parse_number(parts[1].first, parts[1].second));
    }
    if (p.kind == "explicit") {
      detail::require_rest(p, text.size());
      std::vector<cplx> v;
      for (const auto& [item, at] : detail::split_list(p.rest, p.rest_at)) v.emplace_back(detail::parse_number(item, at), 0.0);
      return ModulationSeq::explicit_list(std::move(v));
    }
    if (p.kind == "random") {
      detail::require_rest(p, text.size());
      return ModulationSeq::random(parse_law(p.rest, seed), 0);
    }
  } catch (const DomainError& e) {
    throw ParseError(std::string("modulation: ") + e.what(), p.rest_at);
  }
  throw ParseError("unknown modulation '" + std::string(text) + "'", 0);
}

/*!
  W text in the weight grammar, where the token <G> stands for the G weight
  as one more factor: "n^2*<G>" is n^2 G_n.
*/
[[nodiscard]] inline WeightSeq weight_with_G(std::string_view text, const std::optional<WeightSeq>& G) {
  const auto at = text.find("<G>");
  if (at == std::string_view::npos) return WeightSeq::parse(text);
  if (!G) throw ParseError("<G> used without a G weight", at);
  std::string rest(text.substr(0, at));
  rest += "1";
  rest += text.substr(at + 3);
  if (rest.find("<G>") != std::string::npos) throw ParseError("<G> may appear only once", rest.find("<G>") + 2);
  WeightExpr factor;
  try {
    factor = parse_weight(rest);
  } catch (const ParseError& e) {
    // Offsets after the placeholder shift by the width difference of "<G>" and "1".
    throw ParseError("weight expression", e.offset() > at ? e.offset() + 2 : e.offset());
  }
  if (G->expr()) return WeightSeq::from_expr(factor * *G->expr());
  std::optional<WeightExpr> cls;
  if (G->asymptotic()) cls = factor * *G->asymptotic();
  const WeightSeq base = *G;
  return WeightSeq::custom(to_string(factor) + " * " + base.name(),
                           [base, factor](index_t n) { return factor(static_cast<double>(n)) * base.value(n); }, cls,
                           base.n0());
}

}  // namespace ergolab
