#include "negmn/predictive.hpp"

#include <cmath>
#include <string>

#include "negmn/parallel.hpp"

namespace negmn {

double DirichletPriorSpec::adot(int nu) const {
  double s = 0.0;
  for (double v : a[std::size_t(nu)]) s += v;
  return s;
}

void DirichletPriorSpec::validate_for(const ModelSpec& spec) const {
  if (int(a0.size()) != spec.N || int(a.size()) != spec.N)
    throw domain_error("DirichletPriorSpec: population count mismatch");
  for (int nu = 0; nu < spec.N; ++nu) {
    if (int(a[std::size_t(nu)].size()) != spec.m[std::size_t(nu)])
      throw domain_error("DirichletPriorSpec: length mismatch");
    for (double v : a[std::size_t(nu)])
      if (!(v > 0.0)) throw domain_error("DirichletPriorSpec: a must be > 0");
  }
}

void DirichletPriorSpec::require_proper(const ModelSpec& spec) const {
  for (int nu = 0; nu < spec.N; ++nu)
    if (!(spec.r[std::size_t(nu)] + a0[std::size_t(nu)] > 0.0))
      throw domain_error("posterior impropriety: r + a0 <= 0 at population " +
                         std::to_string(nu));
}

void ShrinkagePriorSpec::validate_for(const ModelSpec& spec) const {
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw domain_error("ShrinkagePriorSpec: alpha and beta must be > 0");
  if (int(gamma.size()) != spec.N)
    throw domain_error("ShrinkagePriorSpec: gamma length mismatch");
  for (double g : gamma)
    if (!(g > 0.0)) throw domain_error("ShrinkagePriorSpec: gamma must be > 0");
  base.validate_for(spec);
}

DirichletPriorSpec jeffreys_prior(const ModelSpec& spec) {
  spec.validate();
  DirichletPriorSpec out;
  out.a0.resize(std::size_t(spec.N));
  out.a.resize(std::size_t(spec.N));
  for (int nu = 0; nu < spec.N; ++nu) {
    out.a0[std::size_t(nu)] = (1.0 - double(spec.m[std::size_t(nu)])) / 2.0;
    out.a[std::size_t(nu)].assign(std::size_t(spec.m[std::size_t(nu)]), 0.5);
  }
  return out;
}

double log_pred_mass_dirichlet(const TableCounts& w, const CountData& x,
                               const ModelSpec& spec, const TableModel& tm,
                               const DirichletPriorSpec& prior) {
  prior.validate_for(spec);
  prior.require_proper(spec);
  w.validate_for(tm);
  x.validate_for(spec);
  TableSuffStats st = table_suff_stats(w, tm, spec);
  double acc = st.log_coef;
  for (int nu = 0; nu < spec.N; ++nu) {
    double r = spec.r[std::size_t(nu)];
    double a0 = prior.a0[std::size_t(nu)];
    double adot = prior.adot(nu);
    double xrow = double(x.row_sum(nu));
    double ltot = double(tm.trials_touching(nu));
    acc += log_gamma(st.s[std::size_t(nu)][0] + r + a0) - log_gamma(r + a0);
    acc -= log_gamma(ltot + r + a0 + xrow + adot) - log_gamma(r + a0 + xrow + adot);
    for (int i = 0; i < spec.m[std::size_t(nu)]; ++i) {
      double xi = double(x.x[std::size_t(nu)][std::size_t(i)]);
      double ai = prior.a[std::size_t(nu)][std::size_t(i)];
      acc += log_gamma(st.s[std::size_t(nu)][std::size_t(i) + 1] + xi + ai) -
             log_gamma(xi + ai);
    }
  }
  return acc;
}

LogMassResult log_pred_mass_shrinkage(const TableCounts& w, const CountData& x,
                                      const ModelSpec& spec, const TableModel& tm,
                                      const ShrinkagePriorSpec& prior,
                                      const QuadratureSpec& quad) {
  prior.validate_for(spec);
  prior.base.require_proper(spec);
  w.validate_for(tm);
  x.validate_for(spec);
  TableSuffStats st = table_suff_stats(w, tm, spec);

  double fixed = st.log_coef;
  for (int nu = 0; nu < spec.N; ++nu)
    for (int i = 0; i < spec.m[std::size_t(nu)]; ++i) {
      double xi = double(x.x[std::size_t(nu)][std::size_t(i)]);
      double ai = prior.base.a[std::size_t(nu)][std::size_t(i)];
      fixed += log_gamma(st.s[std::size_t(nu)][std::size_t(i) + 1] + xi + ai) -
               log_gamma(xi + ai);
    }

  auto make_integrand = [&](bool with_w) {
    return [&, with_w](double u) {
      double acc = (prior.alpha - 1.0) * std::log(u) - prior.beta * u;
      for (int nu = 0; nu < spec.N; ++nu) {
        double g = prior.gamma[std::size_t(nu)];
        double r = spec.r[std::size_t(nu)];
        double a0 = prior.base.a0[std::size_t(nu)];
        double adot = prior.base.adot(nu);
        double xrow = double(x.row_sum(nu));
        double s0 = with_w ? st.s[std::size_t(nu)][0] : 0.0;
        double ltot = with_w ? double(tm.trials_touching(nu)) : 0.0;
        acc += log_gamma(g * u + s0 + r + a0);
        acc -= log_gamma(g * u + ltot + r + a0 + xrow + adot);
      }
      return acc;
    };
  };

  LogQuadResult num = integrate_log_semiinf(make_integrand(true), quad);
  LogQuadResult den = integrate_log_semiinf(make_integrand(false), quad);
  LogMassResult out;
  out.log_mass = fixed + num.log_value - den.log_value;
  out.rel_error = num.rel_error + den.rel_error;
  return out;
}

McMassResult posterior_mc_mass(const TableCounts& w, const CountData& x,
                               const ModelSpec& spec, const TableModel& tm,
                               const ShrinkagePriorSpec& prior, RngSpec rng,
                               std::int64_t n_samples, std::int64_t burn_in) {
  prior.validate_for(spec);
  prior.base.require_proper(spec);
  w.validate_for(tm);
  x.validate_for(spec);
  TableSuffStats st = table_suff_stats(w, tm, spec);

  CounterRng gen(rng);
  double u = prior.alpha / prior.beta;
  std::vector<double> alpha;
  std::vector<double> logp;
  Ragged plog(std::size_t(spec.N));
  std::vector<double> draws;
  draws.reserve(std::size_t(n_samples));

  ProbParam p;
  p.p.resize(std::size_t(spec.N));
  p.p0.resize(std::size_t(spec.N));

  for (std::int64_t it = 0; it < burn_in + n_samples; ++it) {
    // p | u, x: independent Dirichlet blocks, leftover cell first
    double neglog_sum = 0.0;
    for (int nu = 0; nu < spec.N; ++nu) {
      int m = spec.m[std::size_t(nu)];
      alpha.assign(1, prior.gamma[std::size_t(nu)] * u + spec.r[std::size_t(nu)] +
                          prior.base.a0[std::size_t(nu)]);
      if (!(alpha[0] > 0.0) || !std::isfinite(alpha[0]))
        throw numerical_error("posterior_mc_mass: nonpositive Dirichlet parameter", alpha[0]);
      for (int i = 0; i < m; ++i)
        alpha.push_back(double(x.x[std::size_t(nu)][std::size_t(i)]) +
                        prior.base.a[std::size_t(nu)][std::size_t(i)]);
      logp.assign(alpha.size(), 0.0);
      dirichlet_log_draw(gen, alpha, logp);
      plog[std::size_t(nu)] = logp;
      neglog_sum += prior.gamma[std::size_t(nu)] * (-logp[0]);
    }
    // u | p: conjugate Gamma with rate beta + sum gamma * (-log p0)
    double rate = prior.beta + neglog_sum;
    if (!std::isfinite(rate) || !(rate > 0.0))
      throw numerical_error("posterior_mc_mass: non-finite Gamma rate", rate);
    u = gamma_draw(gen, prior.alpha) / rate;

    if (it < burn_in) continue;
    double acc = st.log_coef;
    for (int nu = 0; nu < spec.N; ++nu) {
      const auto& srow = st.s[std::size_t(nu)];
      for (std::size_t i = 0; i < srow.size(); ++i)
        if (srow[i] != 0.0) acc += srow[i] * plog[std::size_t(nu)][i];
    }
    draws.push_back(std::exp(acc));
  }

  MeanSe ms = batch_mean_se(draws);
  return {ms.mean, ms.se};
}

McMassResult posterior_mc_mass_dirichlet(const TableCounts& w, const CountData& x,
                                         const ModelSpec& spec, const TableModel& tm,
                                         const DirichletPriorSpec& prior, RngSpec rng,
                                         std::int64_t n_samples) {
  prior.validate_for(spec);
  prior.require_proper(spec);
  w.validate_for(tm);
  x.validate_for(spec);
  TableSuffStats st = table_suff_stats(w, tm, spec);

  CounterRng gen(rng);
  std::vector<double> alpha, logp;
  std::vector<double> draws;
  draws.reserve(std::size_t(n_samples));
  for (std::int64_t it = 0; it < n_samples; ++it) {
    double acc = st.log_coef;
    for (int nu = 0; nu < spec.N; ++nu) {
      int m = spec.m[std::size_t(nu)];
      alpha.assign(1, spec.r[std::size_t(nu)] + prior.a0[std::size_t(nu)]);
      for (int i = 0; i < m; ++i)
        alpha.push_back(double(x.x[std::size_t(nu)][std::size_t(i)]) +
                        prior.a[std::size_t(nu)][std::size_t(i)]);
      logp.assign(alpha.size(), 0.0);
      dirichlet_log_draw(gen, alpha, logp);
      const auto& srow = st.s[std::size_t(nu)];
      for (std::size_t i = 0; i < srow.size(); ++i)
        if (srow[i] != 0.0) acc += srow[i] * logp[i];
    }
    draws.push_back(std::exp(acc));
  }
  MeanSe ms = batch_mean_se(draws);
  return {ms.mean, ms.se};
}

}  // namespace negmn
