#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace negmn {

struct QuadratureSpec {
  double rel_tol = 1e-10;       // must be in (0, 1e-3]
  int max_subdivisions = 400;

  void validate() const;
};

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;
  int subdivisions = 0;
  bool converged = false;
};

// Adaptive Gauss-Kronrod (7-15) on a finite interval.
QuadResult integrate_gk(const std::function<double(double)>& f, double a, double b,
                        const QuadratureSpec& spec);

struct LogQuadResult {
  double log_value = 0.0;   // log of the integral
  double rel_error = 0.0;   // error estimate relative to the integral
  bool converged = false;
};

// log of integral over (0, inf) of exp(log_f(u)) du. The domain is mapped to
// (0,1) by u = t/(1-t); the integrand peak is located first (coarse grid plus
// golden-section refinement) and divided out so the adaptive rule works on a
// well-scaled function. Throws numerical_error when rel_tol is unattainable.
LogQuadResult integrate_log_semiinf(const std::function<double(double)>& log_f,
                                    const QuadratureSpec& spec);

// Golden-section maximizer on [a,b] for a unimodal function; returns argmax.
double golden_max(const std::function<double(double)>& f, double a, double b,
                  double tol);

// Nodes and weights of the n-point Gauss-Legendre rule on [0,1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre_01(int n);

}  // namespace negmn
