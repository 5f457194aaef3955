#pragma once

#include <cstdint>
#include <functional>
#include <variant>

#include "negmn/model.hpp"
#include "negmn/predictive.hpp"
#include "negmn/tailbound.hpp"

namespace negmn {

// Future observation layout: the first n populations receive future counts
// with shapes s[nu]; the interpolation path runs each shape from r_nu to
// r_nu + s_nu (constant r_nu for nu >= n).
struct FutureSpec {
  int n = 0;
  Vec s;
  enum class Path { linear, quadratic } path = Path::linear;

  void validate_for(const ModelSpec& spec) const;
  double shape_t(const ModelSpec& spec, int nu, double tau) const;
  double shape_tprime(int nu, double tau) const;
};

// Finite atomic mixing measure over the latent exponent: atoms (u_j, mass_j)
// with leftover-cell exponent shift gamma[nu] * u_j added to a0.
struct GeneralShrinkagePriorSpec {
  Vec u;
  Vec mass;
  Vec gamma;
  DirichletPriorSpec base;

  void validate_for(const ModelSpec& spec) const;
  double gtilde(int nu, double uj) const { return gamma[std::size_t(nu)] * uj; }
};

using NmPrior = std::variant<DirichletPriorSpec, GeneralShrinkagePriorSpec>;

// Predictive mass of the future counts y given x; closed Gamma-ratio form,
// one term per prior atom combined by log-sum-exp.
double log_pred_mass_negmn_dirichlet(const CountData& y, const CountData& x,
                                     const ModelSpec& spec, const FutureSpec& fut,
                                     const DirichletPriorSpec& prior);
double log_pred_mass_negmn_shrinkage(const CountData& y, const CountData& x,
                                     const ModelSpec& spec, const FutureSpec& fut,
                                     const GeneralShrinkagePriorSpec& prior);
double log_pred_mass_negmn(const CountData& y, const CountData& x, const ModelSpec& spec,
                           const FutureSpec& fut, const NmPrior& prior);

// Pointwise loss d - theta - theta log(d/theta), both arguments positive.
double kl_loss_pointwise(double d, double theta);

struct RiskEval {
  double value = 0.0;
  double error_bound = 0.0;  // certified truncation plus quadrature estimate
};

// Exact truncated evaluation of E[log g(Y|p) - log ghat(Y;X)] with a certified
// tail bound; the generic form takes any predictive log-mass evaluator
// together with a quadratic tail majorant for the integrand.
RiskEval kl_risk_lhs_exact_fn(
    const ProbParam& p, const ModelSpec& spec, const FutureSpec& fut,
    const std::function<double(const CountData& y, const CountData& x)>& log_pred,
    double trunc, const QuadFormBound& h_bound);
RiskEval kl_risk_lhs_exact(const ProbParam& p, const ModelSpec& spec,
                           const FutureSpec& fut, const NmPrior& prior, double trunc);

struct McRiskEval {
  double value = 0.0;
  double std_error = 0.0;
};
McRiskEval kl_risk_lhs_mc(const ProbParam& p, const ModelSpec& spec,
                          const FutureSpec& fut, const NmPrior& prior,
                          std::int64_t reps, RngSpec rng);

struct RhsOptions {
  int k_max = 400;        // truncation of the degree sum
  int k_exact = 48;       // full composition enumeration up to this degree
  int tau_nodes = 64;     // Gauss-Legendre nodes on the path parameter
  double trunc = 1e-10;   // per-population lattice tail target
};

// Path-integral identity: integrates, over the interpolation parameter, the
// per-degree posterior-mean losses of the probability monomials.
RiskEval kl_risk_rhs_theorem4(const ProbParam& p, const ModelSpec& spec,
                              const FutureSpec& fut, const NmPrior& prior,
                              const RhsOptions& opt);

// Same structure for the risk difference between two priors; the per-degree
// terms depend only on posterior means of the total cell mass powers.
RiskEval kl_risk_diff_corollary3(const ProbParam& p, const ModelSpec& spec,
                                 const FutureSpec& fut,
                                 const GeneralShrinkagePriorSpec& prior_m,
                                 const DirichletPriorSpec& prior_d,
                                 const RhsOptions& opt);

}  // namespace negmn
