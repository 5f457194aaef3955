#pragma once

#include <cstdint>
#include <vector>

namespace negmn {

// Upper bound of the form A + B*T + C*T^2 on |h| where T is the sum of all
// truncated totals. Built termwise from the log-gamma and log-probability
// terms appearing in the bounded expression.
struct QuadFormBound {
  double a = 0.0, b = 0.0, c = 0.0;

  void add_const(double v) { a += v; }
  void add_linear(double coef) { b += coef; }
  // |log Gamma(z)| for z ranging over [zmin, c0 + T]
  void add_lgamma(double c0, double zmin);
  void combine_max(const QuadFormBound& other);
  double eval(double t) const { return a + b * t + c * t * t; }
};

// One truncated negative binomial total: shape, cell mass pdot, truncation
// radius with a certified geometric domination of the pmf beyond it.
struct NbCoord {
  double shape = 0.0;
  double pdot = 0.0;
  std::int64_t radius = 0;
  double log_pmf_next = 0.0;  // log pmf(radius + 1)
  double q = 0.0;             // pmf(k+1)/pmf(k) <= q for k > radius

  double mean() const;
  double variance() const;
  // upper bound on sum_{k > radius} pmf(k) * k^j
  double tail_moment(int j) const;
};

// Radius chosen so the tail mass bound is <= eps.
NbCoord make_nb_coord(double shape, double pdot, double eps);

// Upper bound on sum_{i >= 0} exp(log_first) * q^i * (base + i)^j  (q < 1).
double geometric_poly_tail(double log_first, double q, double base, int j);

// Certified bound on E[|h| 1{any coordinate beyond its radius}] when
// |h| <= bound(T) with T the sum of all coordinate totals and the coordinates
// independent.
double joint_tail_bound(const std::vector<NbCoord>& coords, const QuadFormBound& bound);

}  // namespace negmn
