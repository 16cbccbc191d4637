#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <complex>
#include <cstdio>
#include <map>
#include <string>
#include <string_view>

#include "plurigreen/core/errors.hpp"
#include "plurigreen/core/hermitian.hpp"

namespace plurigreen {

/// Polynomial in N complex variables with complex coefficients.
///
/// Text form: sums of products of numbers, variables and parenthesised
/// groups, with integer powers. Variables are `z` (C¹), or `z1`, `z2`
/// (aliases `z`, `w`) in C². Imaginary numbers carry an `i` suffix; a bare
/// `i` is the imaginary unit.
template <int N>
class Polynomial {
 public:
  using Exponent = std::array<int, N>;

  Polynomial() = default;

  static Polynomial constant(cplx c)
  {
    Polynomial p;
    p.add_term(Exponent{}, c);
    return p;
  }

  static Polynomial variable(int j)
  {
    Exponent e{};
    e.at(static_cast<std::size_t>(j)) = 1;
    Polynomial p;
    p.add_term(e, 1.0);
    return p;
  }

  static Polynomial monomial(const Exponent& e, cplx c = 1.0)
  {
    Polynomial p;
    p.add_term(e, c);
    return p;
  }

  void add_term(const Exponent& e, cplx c)
  {
    for (int k : e)
      if (k < 0) throw InvalidInput("negative exponent");
    auto& slot = terms_[e];
    slot += c;
    if (slot == cplx(0.0)) terms_.erase(e);
  }

  const std::map<Exponent, cplx>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  int degree() const
  {
    int d = 0;
    for (const auto& [e, c] : terms_) d = std::max(d, total(e));
    return d;
  }

  /// Lowest total degree among terms (vanishing order at the origin); 0 for the zero polynomial.
  int order() const
  {
    if (terms_.empty()) return 0;
    int d = std::numeric_limits<int>::max();
    for (const auto& [e, c] : terms_) d = std::min(d, total(e));
    return d;
  }

  cplx operator()(const CVector<N>& z) const
  {
    cplx s = 0.0;
    for (const auto& [e, c] : terms_) {
      cplx m = c;
      for (int j = 0; j < N; ++j)
        for (int k = 0; k < e[static_cast<std::size_t>(j)]; ++k) m *= z(j);
      s += m;
    }
    return s;
  }

  /// Holomorphic partial derivative ∂/∂z_j.
  Polynomial derivative(int j) const
  {
    Polynomial out;
    for (const auto& [e, c] : terms_) {
      const int k = e[static_cast<std::size_t>(j)];
      if (k == 0) continue;
      Exponent f = e;
      f[static_cast<std::size_t>(j)] = k - 1;
      out.add_term(f, c * static_cast<double>(k));
    }
    return out;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b)
  {
    for (const auto& [e, c] : b.terms_) a.add_term(e, c);
    return a;
  }
  friend Polynomial operator-(const Polynomial& a) { return a * constant(-1.0); }
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-b); }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b)
  {
    Polynomial out;
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) {
        Exponent e{};
        for (std::size_t j = 0; j < N; ++j) e[j] = ea[j] + eb[j];
        out.add_term(e, ca * cb);
      }
    return out;
  }
  Polynomial pow(int k) const
  {
    if (k < 0) throw InvalidInput("negative power");
    Polynomial out = constant(1.0);
    for (int i = 0; i < k; ++i) out = out * *this;
    return out;
  }

  bool operator==(const Polynomial&) const = default;

  static Polynomial parse(std::string_view text);
  std::string to_string() const;

 private:
  static int total(const Exponent& e)
  {
    int s = 0;
    for (int k : e) s += k;
    return s;
  }

  std::map<Exponent, cplx> terms_;
};

namespace detail {

inline std::string format_double(double x)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <int N>
class PolynomialParser {
 public:
  explicit PolynomialParser(std::string_view s) : s_(s) {}

  Polynomial<N> run()
  {
    auto p = expr();
    skip();
    if (pos_ != s_.size()) throw ParseError(pos_, "operator or end of polynomial");
    return p;
  }

 private:
  void skip()
  {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c)
  {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Polynomial<N> expr()
  {
    auto p = term();
    for (;;) {
      if (eat('+')) p = p + term();
      else if (eat('-')) p = p - term();
      else return p;
    }
  }

  Polynomial<N> term()
  {
    auto p = factor();
    while (eat('*')) p = p * factor();
    return p;
  }

  Polynomial<N> factor()
  {
    if (eat('-')) return -factor();
    auto p = primary();
    if (eat('^')) {
      skip();
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) throw ParseError(pos_, "non-negative integer exponent");
      const int k = std::stoi(std::string(s_.substr(start, pos_ - start)));
      if (k > 64) throw ParseError(start, "exponent <= 64");
      p = p.pow(k);
    }
    return p;
  }

  Polynomial<N> primary()
  {
    skip();
    if (pos_ >= s_.size()) throw ParseError(pos_, "number, variable or '('");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      auto p = expr();
      if (!eat(')')) throw ParseError(pos_, "')'");
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (c == 'i') {
      ++pos_;
      return Polynomial<N>::constant(cplx(0.0, 1.0));
    }
    if (c == 'z' || c == 'w') return variable();
    throw ParseError(pos_, "number, variable or '('");
  }

  Polynomial<N> number()
  {
    const char* begin = s_.data() + pos_;
    char* end = nullptr;
    const std::string tail(begin, s_.size() - pos_);
    const double v = std::strtod(tail.c_str(), &end);
    const std::size_t used = static_cast<std::size_t>(end - tail.c_str());
    if (used == 0) throw ParseError(pos_, "number");
    pos_ += used;
    if (pos_ < s_.size() && s_[pos_] == 'i') {
      ++pos_;
      return Polynomial<N>::constant(cplx(0.0, v));
    }
    return Polynomial<N>::constant(cplx(v, 0.0));
  }

  Polynomial<N> variable()
  {
    const std::size_t start = pos_;
    const char c = s_[pos_++];
    int index = -1;
    if (c == 'w') {
      index = 1;
    } else if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      index = s_[pos_++] - '1';
    } else {
      index = 0;
    }
    if (index < 0 || index >= N) throw ParseError(start, N == 1 ? "variable z" : "variable z1, z2, z or w");
    return Polynomial<N>::variable(index);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

template <int N>
Polynomial<N> Polynomial<N>::parse(std::string_view text)
{
  return detail::PolynomialParser<N>(text).run();
}

/// Canonical text; parse(to_string()) reproduces the polynomial exactly.
template <int N>
std::string Polynomial<N>::to_string() const
{
  if (terms_.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [e, c] : terms_) {
    std::string mono;
    for (int j = 0; j < N; ++j) {
      const int k = e[static_cast<std::size_t>(j)];
      if (k == 0) continue;
      if (!mono.empty()) mono += "*";
      mono += N == 1 ? std::string("z") : "z" + std::to_string(j + 1);
      if (k > 1) mono += "^" + std::to_string(k);
    }
    std::string coef;
    bool negative = false;
    if (c.imag() == 0.0) {
      negative = std::signbit(c.real());
      const double a = std::abs(c.real());
      if (a != 1.0 || mono.empty()) coef = detail::format_double(a);
    } else if (c.real() == 0.0) {
      negative = std::signbit(c.imag());
      coef = detail::format_double(std::abs(c.imag())) + "i";
    } else {
      coef = "(" + detail::format_double(c.real()) + (std::signbit(c.imag()) ? " - " : " + ") +
             detail::format_double(std::abs(c.imag())) + "i)";
    }
    if (first) out += negative ? "-" : "";
    else out += negative ? " - " : " + ";
    first = false;
    out += coef;
    if (!coef.empty() && !mono.empty()) out += "*";
    out += mono;
  }
  return out;
}

}  // namespace plurigreen
