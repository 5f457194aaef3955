#pragma once

#include <cstdint>

#include "negmn/model.hpp"
#include "negmn/quadrature.hpp"

namespace negmn {

// Product-Dirichlet prior: density proportional to
//   prod_nu p0^(a0_nu - 1) prod_i p_i^(a_i_nu - 1).
// a0 may be negative; posterior propriety needs r_nu + a0_nu > 0.
struct DirichletPriorSpec {
  Vec a0;
  Ragged a;

  double adot(int nu) const;
  void validate_for(const ModelSpec& spec) const;
  void require_proper(const ModelSpec& spec) const;
};

// Hierarchical shrinkage prior: gamma-weighted latent exponent u on every
// leftover cell, u integrated against u^(alpha-1) e^(-beta u) du.
struct ShrinkagePriorSpec {
  double alpha = 1.0;
  double beta = 1.0;
  Vec gamma;
  DirichletPriorSpec base;

  void validate_for(const ModelSpec& spec) const;
};

DirichletPriorSpec jeffreys_prior(const ModelSpec& spec);

// Closed-form Bayesian predictive mass of the table counts w given x.
double log_pred_mass_dirichlet(const TableCounts& w, const CountData& x,
                               const ModelSpec& spec, const TableModel& tm,
                               const DirichletPriorSpec& prior);

struct LogMassResult {
  double log_mass = 0.0;
  double rel_error = 0.0;  // combined quadrature error estimate
};

// Predictive mass under the shrinkage prior via stable quadrature over u:
// the u-integrals are evaluated in log space with the peak divided out.
LogMassResult log_pred_mass_shrinkage(const TableCounts& w, const CountData& x,
                                      const ModelSpec& spec, const TableModel& tm,
                                      const ShrinkagePriorSpec& prior,
                                      const QuadratureSpec& quad);

struct McMassResult {
  double mass = 0.0;
  double std_error = 0.0;
};

// Gibbs estimate of the same mass: alternate u | p ~ Gamma and p | u, x ~
// product Dirichlet, average the table pmf over retained draws.
McMassResult posterior_mc_mass(const TableCounts& w, const CountData& x,
                               const ModelSpec& spec, const TableModel& tm,
                               const ShrinkagePriorSpec& prior, RngSpec rng,
                               std::int64_t n_samples, std::int64_t burn_in);

// Dirichlet-prior special case with independent posterior draws; used as the
// closed-form cross-check for the sampler.
McMassResult posterior_mc_mass_dirichlet(const TableCounts& w, const CountData& x,
                                         const ModelSpec& spec, const TableModel& tm,
                                         const DirichletPriorSpec& prior, RngSpec rng,
                                         std::int64_t n_samples);

}  // namespace negmn
