#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <system_error>

#include "ergolab/error.hpp"

namespace ergolab {

/*!
  A power-log expression  scale * x^a * (ln x)^b * (lnln x)^c.

  Used both for weights as functions of the index n and for asymptotic
  classes of composed sequences as functions of k. A class produced by a
  super-exponential schedule additionally carries the factor k^(superexp*k).
*/
struct WeightExpr {
  double scale = 1.0;
  double a = 0.0;  ///< exponent of x
  double b = 0.0;  ///< exponent of ln x
  double c = 0.0;  ///< exponent of lnln x
  double superexp = 0.0;

  [[nodiscard]] static WeightExpr power(double exponent, double scale = 1.0) {
    return WeightExpr{scale, exponent, 0.0, 0.0, 0.0};
  }

  [[nodiscard]] static WeightExpr constant(double scale) { return WeightExpr{scale, 0.0, 0.0, 0.0, 0.0}; }

  [[nodiscard]] bool has_log() const { return b != 0.0; }
  [[nodiscard]] bool has_loglog() const { return c != 0.0; }
  [[nodiscard]] bool is_constant() const { return a == 0.0 && b == 0.0 && c == 0.0 && superexp == 0.0; }

  /// Natural log of the value at x. Requires x > e when c != 0 and x > 1 when b != 0.
  [[nodiscard]] double log_at(double x) const {
    double out = std::log(scale);
    const double lx = std::log(x);
    if (superexp != 0.0) out += superexp * x * lx;
    if (a != 0.0) out += a * lx;
    if (b != 0.0) out += b * std::log(lx);
    if (c != 0.0) out += c * std::log(std::log(lx));
    return out;
  }

  /// Value at x, evaluated as a product of powers (bit-stable for a given x).
  [[nodiscard]] double operator()(double x) const {
    double out = scale;
    if (superexp != 0.0) out *= std::pow(x, superexp * x);
    if (a != 0.0) out *= std::pow(x, a);
    if (b != 0.0 || c != 0.0) {
      const double lx = std::log(x);
      if (b != 0.0) out *= std::pow(lx, b);
      if (c != 0.0) out *= std::pow(std::log(lx), c);
    }
    return out;
  }

  friend WeightExpr operator*(const WeightExpr& lhs, const WeightExpr& rhs) {
    return WeightExpr{lhs.scale * rhs.scale, lhs.a + rhs.a, lhs.b + rhs.b, lhs.c + rhs.c,
                      lhs.superexp + rhs.superexp};
  }

  friend WeightExpr operator/(const WeightExpr& lhs, const WeightExpr& rhs) {
    return WeightExpr{lhs.scale / rhs.scale, lhs.a - rhs.a, lhs.b - rhs.b, lhs.c - rhs.c,
                      lhs.superexp - rhs.superexp};
  }

  /// The expression raised to a real power.
  [[nodiscard]] WeightExpr pow(double e) const {
    return WeightExpr{std::pow(scale, e), a * e, b * e, c * e, superexp * e};
  }

  [[nodiscard]] WeightExpr scaled(double factor) const {
    WeightExpr out = *this;
    out.scale *= factor;
    return out;
  }

  friend bool operator==(const WeightExpr&, const WeightExpr&) = default;
};

namespace detail {

inline std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

class WeightParser {
 public:
  explicit WeightParser(std::string_view text) : text_(text) {}

  WeightExpr parse() {
    WeightExpr out;
    skip_ws();
    if (at_end()) throw ParseError("empty weight expression", pos_);
    factor(out);
    skip_ws();
    while (!at_end()) {
      if (text_[pos_] != '*') throw ParseError("expected '*' between factors", pos_);
      ++pos_;
      skip_ws();
      if (at_end()) throw ParseError("expected factor after '*'", pos_);
      factor(out);
      skip_ws();
    }
    if (!(out.scale > 0.0) || !std::isfinite(out.scale)) {
      throw ParseError("scale must be a positive finite number", 0);
    }
    return out;
  }

 private:
  [[nodiscard]] bool at_end() const { return pos_ >= text_.size(); }

  void skip_ws() {
    while (!at_end() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  bool consume(std::string_view token) {
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  void expect_n_argument() {
    skip_ws();
    if (!consume("(")) throw ParseError("expected '('", pos_);
    skip_ws();
    if (!consume("n")) throw ParseError("expected 'n' inside parentheses", pos_);
    skip_ws();
    if (!consume(")")) throw ParseError("expected ')'", pos_);
  }

  double number(bool allow_sign) {
    const std::size_t start = pos_;
    if (allow_sign && !at_end() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
    const std::size_t digits_start = pos_;
    bool seen_digit = false;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
      seen_digit = true;
    }
    if (!at_end() && text_[pos_] == '.') {
      ++pos_;
      while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
        seen_digit = true;
      }
    }
    if (!seen_digit) throw ParseError("expected a number", digits_start);
    if (!at_end() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        while (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) ++p;
        pos_ = p;
      } else {
        throw ParseError("malformed exponent in number", p);
      }
    }
    // from_chars rejects a leading '+'.
    std::size_t parse_from = start;
    if (text_[start] == '+') parse_from = start + 1;
    double value = 0.0;
    const auto res = std::from_chars(text_.data() + parse_from, text_.data() + pos_, value);
    if (res.ec != std::errc{} || res.ptr != text_.data() + pos_) {
      throw ParseError("number out of range", start);
    }
    if (!std::isfinite(value)) throw ParseError("number out of range", start);
    return value;
  }

  double optional_exponent() {
    skip_ws();
    if (!at_end() && text_[pos_] == '^') {
      ++pos_;
      skip_ws();
      return number(/*allow_sign=*/true);
    }
    return 1.0;
  }

  void factor(WeightExpr& out) {
    const std::size_t start = pos_;
    if (consume("lnln")) {
      expect_n_argument();
      out.c += optional_exponent();
    } else if (consume("ln")) {
      expect_n_argument();
      out.b += optional_exponent();
    } else if (consume("n")) {
      out.a += optional_exponent();
    } else if (!at_end() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
      const double base = number(/*allow_sign=*/false);
      const double e = optional_exponent();
      const double v = std::pow(base, e);
      if (!std::isfinite(v) || !(v > 0.0)) throw ParseError("constant factor must be positive and finite", start);
      out.scale *= v;
    } else {
      throw ParseError("expected 'n', 'ln(n)', 'lnln(n)' or a number", start);
    }
    if (!std::isfinite(out.a) || !std::isfinite(out.b) || !std::isfinite(out.c)) {
      throw ParseError("exponent out of range", start);
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/*!
  Parses the weight grammar

      expr   := factor ('*' factor)*
      factor := ('n' | 'ln(n)' | 'lnln(n)' | number) ['^' signed-number]

  into a normalized expression: one exponent per base (repeated bases have
  their exponents added) and every numeric factor folded into `scale`.
  Throws ParseError with the byte offset of the first problem.
*/
[[nodiscard]] inline WeightExpr parse_weight(std::string_view text) { return detail::WeightParser(text).parse(); }

/// Canonical text `scale * n^a * ln(n)^b * lnln(n)^c`, 17 significant digits.
[[nodiscard]] inline std::string to_string(const WeightExpr& e) {
  if (e.superexp != 0.0) {
    throw DomainError("super-exponential classes have no text form in the weight grammar");
  }
  return detail::format_double(e.scale) + " * n^" + detail::format_double(e.a) + " * ln(n)^" +
         detail::format_double(e.b) + " * lnln(n)^" + detail::format_double(e.c);
}

/// Human-readable class description, e.g. "k^-1.5 (ln k)^0 (lnln k)^0".
[[nodiscard]] inline std::string describe_class(const WeightExpr& e, std::string_view var = "k") {
  std::string out = detail::format_double(e.scale);
  if (e.superexp != 0.0) out += " * " + std::string(var) + "^(" + detail::format_double(e.superexp) + "*" + std::string(var) + ")";
  out += " * " + std::string(var) + "^" + detail::format_double(e.a);
  out += " * (ln " + std::string(var) + ")^" + detail::format_double(e.b);
  out += " * (lnln " + std::string(var) + ")^" + detail::format_double(e.c);
  return out;
}

}  // namespace ergolab
