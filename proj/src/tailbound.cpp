#include "negmn/tailbound.hpp"

#include <algorithm>
#include <cmath>

#include "negmn/errors.hpp"

namespace negmn {

void QuadFormBound::add_lgamma(double c0, double zmin) {
  if (!(zmin > 0.0)) throw domain_error("QuadFormBound: zmin must be > 0");
  // |lgamma(z)| <= max(log(1/zmin), 0) + 0.15 + z*max(log z, 0) and
  // z log z <= z^2, with (c0+T)^2 <= 2 c0^2 + 2 T^2
  a += std::max(std::log(1.0 / zmin), 0.0) + 0.15 + c0 + 2.0 * c0 * c0;
  b += 1.0;
  c += 2.0;
}

void QuadFormBound::combine_max(const QuadFormBound& other) {
  a = std::max(a, other.a);
  b = std::max(b, other.b);
  c = std::max(c, other.c);
}

double NbCoord::mean() const { return shape * pdot / (1.0 - pdot); }

double NbCoord::variance() const {
  double p0 = 1.0 - pdot;
  return shape * pdot / (p0 * p0);
}

double geometric_poly_tail(double log_first, double q, double base, int j) {
  if (!(q > 0.0) || !(q < 1.0)) throw domain_error("geometric_poly_tail: q in (0,1)");
  double first = std::exp(log_first);
  if (first == 0.0) return 0.0;
  double acc = 0.0;
  double term = first * std::pow(base, double(j));
  double i = 0.0;
  for (int it = 0; it < 2000000; ++it) {
    acc += term;
    double next_base = base + i + 1.0;
    double ratio = q * std::pow(next_base / (base + i), double(j));
    // once the dominated ratio is safely below 1 the remainder is geometric
    if (ratio < 0.9) {
      double rem = term * ratio / (1.0 - ratio);
      if (rem < 1e-16 * acc + 1e-300) return acc + rem;
    }
    term *= ratio;
    i += 1.0;
  }
  throw numerical_error("geometric_poly_tail: did not converge", acc);
}

double NbCoord::tail_moment(int j) const {
  // sum_{k>radius} pmf(k) k^j <= sum_{i>=0} pmf(radius+1) q^i (radius+1+i)^j
  return geometric_poly_tail(log_pmf_next, q, double(radius) + 1.0, j);
}

NbCoord make_nb_coord(double shape, double pdot, double eps) {
  if (!(pdot > 0.0) || !(pdot < 1.0)) throw domain_error("make_nb_coord: pdot in (0,1)");
  if (!(shape > 0.0)) throw domain_error("make_nb_coord: shape > 0");
  double p0 = 1.0 - pdot;
  double log_pmf = shape * std::log(p0);
  std::int64_t k = 0;
  for (;;) {
    double log_next = log_pmf + std::log(pdot * (shape + double(k)) / (double(k) + 1.0));
    double q = pdot * std::max(1.0, (shape + double(k) + 1.0) / (double(k) + 2.0));
    if (q < 1.0 && std::exp(log_next) / (1.0 - q) <= eps) {
      NbCoord out;
      out.shape = shape;
      out.pdot = pdot;
      out.radius = k;
      out.log_pmf_next = log_next;
      out.q = q;
      return out;
    }
    log_pmf = log_next;
    ++k;
    if (k > 100000000) throw resource_error("make_nb_coord: radius exceeds budget");
  }
}

double joint_tail_bound(const std::vector<NbCoord>& coords, const QuadFormBound& bound) {
  // E[(A + B T + C T^2) 1{coord i in tail}] expanded over T = T_i + R with R
  // the independent rest; summed over i (union bound)
  double mean_all = 0.0, var_all = 0.0;
  for (const auto& c : coords) {
    mean_all += c.mean();
    var_all += c.variance();
  }
  double total = 0.0;
  for (const auto& c : coords) {
    double s0 = c.tail_moment(0);
    double s1 = c.tail_moment(1);
    double s2 = c.tail_moment(2);
    double mr = mean_all - c.mean();
    double vr = var_all - c.variance();
    double r2 = vr + mr * mr;  // E[R^2]
    total += bound.a * s0 + bound.b * (s1 + mr * s0) +
             bound.c * (s2 + 2.0 * mr * s1 + r2 * s0);
  }
  return total;
}

}  // namespace negmn
