#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

#include "negmn/errors.hpp"

namespace negmn {

// log Gamma(x) for x > 0. Thin guard over std::lgamma, which on glibc is
// accurate to <= 2 ulp across the ranges used here (spot-checked in tests
// against 50-digit references).
inline double log_gamma(double x) {
  if (!(x > 0.0)) throw domain_error("log_gamma: argument must be positive");
  return std::lgamma(x);
}

namespace detail {
inline const std::array<double, 1025>& log_factorial_table() {
  static const std::array<double, 1025> table = [] {
    std::array<double, 1025> t{};
    t[0] = 0.0;
    for (std::size_t n = 1; n < t.size(); ++n) t[n] = t[n - 1] + std::log(double(n));
    return t;
  }();
  return table;
}
}  // namespace detail

inline double log_factorial(std::int64_t n) {
  if (n < 0) throw domain_error("log_factorial: negative argument");
  const auto& t = detail::log_factorial_table();
  if (n < std::int64_t(t.size())) return t[std::size_t(n)];
  return std::lgamma(double(n) + 1.0);
}

inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

inline double log_sum_exp(std::span<const double> v) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : v) hi = std::max(hi, x);
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

// log of the multinomial coefficient total! / prod(counts!).
template <typename Ints>
inline double log_multinomial_coef(const Ints& counts) {
  std::int64_t total = 0;
  double s = 0.0;
  for (auto c : counts) {
    total += c;
    s -= log_factorial(c);
  }
  return s + log_factorial(total);
}

}  // namespace negmn
