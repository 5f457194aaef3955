#include "negmn/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

#include "negmn/errors.hpp"

namespace negmn {

void QuadratureSpec::validate() const {
  if (!(rel_tol > 0.0) || rel_tol > 1e-3)
    throw domain_error("QuadratureSpec: rel_tol must be in (0, 1e-3]");
  if (max_subdivisions < 1) throw domain_error("QuadratureSpec: max_subdivisions >= 1");
}

namespace {

// 15-point Kronrod extension of 7-point Gauss (positive abscissae).
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Interval {
  double a, b, value, error;
  bool operator<(const Interval& o) const { return error < o.error; }
};

Interval gk15(const std::function<double(double)>& f, double a, double b) {
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double fc = f(c);
  double res_g = fc * kWg[3];
  double res_k = fc * kWgk[7];
  for (int j = 0; j < 7; ++j) {
    double x = h * kXgk[j];
    double f1 = f(c - x), f2 = f(c + x);
    res_k += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) res_g += kWg[j / 2] * (f1 + f2);
  }
  Interval out;
  out.a = a;
  out.b = b;
  out.value = res_k * h;
  double diff = std::abs(res_k - res_g) * h;
  // QUADPACK-style sharpened estimate
  out.error = diff == 0.0 ? 0.0 : std::min(diff, std::pow(200.0 * diff, 1.5));
  if (!std::isfinite(out.error)) out.error = diff;
  return out;
}

}  // namespace

QuadResult integrate_gk(const std::function<double(double)>& f, double a, double b,
                        const QuadratureSpec& spec) {
  spec.validate();
  std::priority_queue<Interval> heap;
  heap.push(gk15(f, a, b));
  double total = heap.top().value, err = heap.top().error;
  int splits = 0;
  while (err > spec.rel_tol * std::abs(total) && splits < spec.max_subdivisions) {
    Interval worst = heap.top();
    heap.pop();
    double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {  // interval at machine resolution
      heap.push(worst);
      break;
    }
    Interval left = gk15(f, worst.a, mid), right = gk15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++splits;
  }
  QuadResult out;
  out.value = total;
  out.abs_error = err;
  out.subdivisions = splits;
  out.converged = err <= spec.rel_tol * std::abs(total);
  return out;
}

double golden_max(const std::function<double(double)>& f, double a, double b,
                  double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

LogQuadResult integrate_log_semiinf(const std::function<double(double)>& log_f,
                                    const QuadratureSpec& spec) {
  spec.validate();
  auto log_g = [&](double t) {
    double u = t / (1.0 - t);
    return log_f(u) - 2.0 * std::log1p(-t);
  };
  // coarse scan to bracket the peak, then golden-section refinement
  const int grid = 256;
  double best_t = 0.5, best_v = -std::numeric_limits<double>::infinity();
  for (int i = 1; i < grid; ++i) {
    double t = double(i) / grid;
    double v = log_g(t);
    if (v > best_v) {
      best_v = v;
      best_t = t;
    }
  }
  double lo = std::max(1e-12, best_t - 1.5 / grid);
  double hi = std::min(1.0 - 1e-12, best_t + 1.5 / grid);
  double peak_t = golden_max(log_g, lo, hi, 1e-12);
  double shift = std::max(log_g(peak_t), best_v);
  if (!std::isfinite(shift))
    throw numerical_error("integrate_log_semiinf: integrand peak is not finite", 0.0);

  auto g = [&](double t) {
    double v = log_g(t) - shift;
    return v < -745.0 ? 0.0 : std::exp(v);
  };
  QuadResult q = integrate_gk(g, 0.0, 1.0, spec);
  LogQuadResult out;
  if (!(q.value > 0.0))
    throw numerical_error("integrate_log_semiinf: integral evaluated to zero", q.abs_error);
  out.log_value = shift + std::log(q.value);
  out.rel_error = q.abs_error / q.value;
  out.converged = q.converged;
  if (!q.converged)
    throw numerical_error("integrate_log_semiinf: requested tolerance not reached",
                          out.rel_error);
  return out;
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre_01(int n) {
  if (n < 1) throw domain_error("gauss_legendre_01: n must be >= 1");
  // Newton iteration on Legendre polynomials, standard (-1,1) rule mapped to (0,1)
  std::vector<double> x(std::size_t(n), 0.0), w(std::size_t(n), 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (double(i) + 0.75) / (double(n) + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - double(j) * p2) / (double(j) + 1.0);
      }
      pp = double(n) * (z * p0 - p1) / (z * z - 1.0);
      double z1 = z;
      z = z1 - p0 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    x[std::size_t(i)] = 0.5 * (1.0 - z);
    x[std::size_t(n - 1 - i)] = 0.5 * (1.0 + z);
    double weight = 1.0 / ((1.0 - z * z) * pp * pp);
    w[std::size_t(i)] = weight;
    w[std::size_t(n - 1 - i)] = weight;
  }
  return {x, w};
}

}  // namespace negmn
