#include "negmn/nmpredict.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "negmn/parallel.hpp"
#include "negmn/quadrature.hpp"

namespace negmn {

void FutureSpec::validate_for(const ModelSpec& spec) const {
  if (n < 1 || n > spec.N) throw domain_error("FutureSpec: n must be in 1..N");
  if (int(s.size()) != n) throw domain_error("FutureSpec: s must have length n");
  for (double v : s)
    if (!(v > 0.0)) throw domain_error("FutureSpec: future shapes must be > 0");
}

double FutureSpec::shape_t(const ModelSpec& spec, int nu, double tau) const {
  double r = spec.r[std::size_t(nu)];
  if (nu >= n) return r;
  double w = path == Path::linear ? tau : tau * tau;
  return r + w * s[std::size_t(nu)];
}

double FutureSpec::shape_tprime(int nu, double tau) const {
  if (nu >= n) return 0.0;
  return path == Path::linear ? s[std::size_t(nu)] : 2.0 * tau * s[std::size_t(nu)];
}

void GeneralShrinkagePriorSpec::validate_for(const ModelSpec& spec) const {
  if (u.empty() || u.size() != mass.size())
    throw domain_error("GeneralShrinkagePriorSpec: need matching atom locations and masses");
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (!(u[j] > 0.0)) throw domain_error("GeneralShrinkagePriorSpec: atoms must be > 0");
    if (!(mass[j] > 0.0)) throw domain_error("GeneralShrinkagePriorSpec: masses must be > 0");
  }
  if (int(gamma.size()) != spec.N)
    throw domain_error("GeneralShrinkagePriorSpec: gamma length mismatch");
  for (double g : gamma)
    if (g < 0.0) throw domain_error("GeneralShrinkagePriorSpec: gamma must be >= 0");
  base.validate_for(spec);
}

double kl_loss_pointwise(double d, double theta) {
  if (!(d > 0.0) || !(theta > 0.0))
    throw domain_error("kl_loss_pointwise: both arguments must be > 0");
  return d - theta - theta * std::log(d / theta);
}

namespace {

// continuous extension at theta -> 0+ for deep-tail degrees where pdot^k
// underflows; the dropped terms are below 1e-290
double kl_loss_from_log_theta(double d, double log_theta) {
  if (log_theta < -700.0) return d;
  double theta = std::exp(log_theta);
  return d - theta - theta * (std::log(d) - log_theta);
}

}  // namespace

namespace {

// canonical finite-mixture view: one term per atom, a0 shifted per population
struct AtomicPrior {
  struct Term {
    double log_mass;
    Vec shift;  // added to a0[nu]
  };
  std::vector<Term> terms;
  const DirichletPriorSpec* base;

  static AtomicPrior from(const DirichletPriorSpec& d, const ModelSpec& spec) {
    d.validate_for(spec);
    AtomicPrior out;
    out.base = &d;
    out.terms.push_back({0.0, Vec(std::size_t(spec.N), 0.0)});
    return out;
  }
  static AtomicPrior from(const GeneralShrinkagePriorSpec& g, const ModelSpec& spec) {
    g.validate_for(spec);
    AtomicPrior out;
    out.base = &g.base;
    for (std::size_t j = 0; j < g.u.size(); ++j) {
      AtomicPrior::Term t;
      t.log_mass = std::log(g.mass[j]);
      t.shift.resize(std::size_t(spec.N));
      for (int nu = 0; nu < spec.N; ++nu)
        t.shift[std::size_t(nu)] = g.gtilde(nu, g.u[j]);
      out.terms.push_back(std::move(t));
    }
    return out;
  }
  static AtomicPrior from(const NmPrior& p, const ModelSpec& spec) {
    if (const auto* d = std::get_if<DirichletPriorSpec>(&p)) return from(*d, spec);
    return from(std::get<GeneralShrinkagePriorSpec>(p), spec);
  }

  void require_proper(const ModelSpec& spec) const {
    for (const auto& t : terms)
      for (int nu = 0; nu < spec.N; ++nu)
        if (!(t.shift[std::size_t(nu)] + spec.r[std::size_t(nu)] +
                  base->a0[std::size_t(nu)] >
              0.0))
          throw domain_error("predictive mass: improper posterior term at population " +
                             std::to_string(nu));
  }
};

double future_shape(const FutureSpec& fut, int nu) {
  return nu < fut.n ? fut.s[std::size_t(nu)] : 0.0;
}

// log ghat(y; x) for the canonical prior
double log_pred_mass_atomic(const CountData& y, const CountData& x, const ModelSpec& spec,
                            const FutureSpec& fut, const AtomicPrior& prior) {
  x.validate_for(spec);
  y.validate_for(spec);
  fut.validate_for(spec);
  prior.require_proper(spec);
  for (int nu = fut.n; nu < spec.N; ++nu)
    if (y.row_sum(nu) != 0)
      throw domain_error("log_pred_mass_negmn: future counts must vanish beyond n");

  double prefix = 0.0;
  for (int nu = 0; nu < fut.n; ++nu) {
    double s = fut.s[std::size_t(nu)];
    double yrow = double(y.row_sum(nu));
    prefix += log_gamma(s + yrow) - log_gamma(s);
    for (auto yi : y.x[std::size_t(nu)]) prefix -= log_factorial(yi);
  }

  std::vector<double> num(prior.terms.size()), den(prior.terms.size());
  for (std::size_t j = 0; j < prior.terms.size(); ++j) {
    const auto& term = prior.terms[j];
    double accn = term.log_mass, accd = term.log_mass;
    for (int nu = 0; nu < spec.N; ++nu) {
      double r = spec.r[std::size_t(nu)];
      double a0 = prior.base->a0[std::size_t(nu)] + term.shift[std::size_t(nu)];
      double adot = prior.base->adot(nu);
      double s = future_shape(fut, nu);
      double xrow = double(x.row_sum(nu));
      double yrow = double(y.row_sum(nu));
      accn += log_gamma(s + r + a0) - log_gamma(s + r + a0 + yrow + xrow + adot);
      accd += log_gamma(r + a0) - log_gamma(r + a0 + xrow + adot);
      for (int i = 0; i < spec.m[std::size_t(nu)]; ++i) {
        double ai = prior.base->a[std::size_t(nu)][std::size_t(i)];
        double xi = double(x.x[std::size_t(nu)][std::size_t(i)]);
        double yi = double(y.x[std::size_t(nu)][std::size_t(i)]);
        accn += log_gamma(yi + xi + ai);
        accd += log_gamma(xi + ai);
      }
    }
    num[j] = accn;
    den[j] = accd;
  }
  return prefix + log_sum_exp(num) - log_sum_exp(den);
}

// quadratic tail majorant for |log g| + |log ghat| in the total count
QuadFormBound h_bound_negmn(const ModelSpec& spec, const FutureSpec& fut,
                            const ProbParam& p, const AtomicPrior& prior) {
  QuadFormBound hb;
  auto add_prefix = [&] {
    for (int nu = 0; nu < fut.n; ++nu) {
      double s = fut.s[std::size_t(nu)];
      hb.add_lgamma(s, std::min(s, 1.0));
      hb.add_const(std::abs(log_gamma(s)));
      hb.add_lgamma(1.0, 1.0);  // sum of per-cell factorials <= lgamma(1 + total)
    }
  };
  // true density: prefix plus linear log-probability terms
  add_prefix();
  for (int nu = 0; nu < fut.n; ++nu) {
    hb.add_const(fut.s[std::size_t(nu)] * std::abs(std::log(p.p0[std::size_t(nu)])));
    double lp = 0.0;
    for (double v : p.p[std::size_t(nu)]) lp = std::max(lp, std::abs(std::log(v)));
    hb.add_linear(lp);
  }
  // predictive mass: prefix, per-population Gamma-ratio terms, mixture overhead
  add_prefix();
  double max_abs_logmass = 0.0;
  for (const auto& t : prior.terms)
    max_abs_logmass = std::max(max_abs_logmass, std::abs(t.log_mass));
  hb.add_const(2.0 * (std::log(double(prior.terms.size())) + max_abs_logmass));
  for (int nu = 0; nu < spec.N; ++nu) {
    double r = spec.r[std::size_t(nu)];
    double adot = prior.base->adot(nu);
    double s = future_shape(fut, nu);
    double shift_hi = 0.0, shift_lo = std::numeric_limits<double>::infinity();
    for (const auto& t : prior.terms) {
      shift_hi = std::max(shift_hi, t.shift[std::size_t(nu)]);
      shift_lo = std::min(shift_lo, t.shift[std::size_t(nu)]);
    }
    double a0 = prior.base->a0[std::size_t(nu)];
    double head_lo = shift_lo + r + a0, head_hi = shift_hi + s + r + a0;
    // constant heads of the numerator and denominator, worst term
    hb.add_const(2.0 * (std::max(std::log(1.0 / head_lo), 0.0) + 0.15 + head_hi +
                        head_hi * head_hi));
    // the two trailing Gamma terms with count-dependent arguments
    hb.add_lgamma(head_hi + adot, head_lo);
    hb.add_lgamma(head_hi + adot, head_lo);
    for (int i = 0; i < spec.m[std::size_t(nu)]; ++i) {
      double ai = prior.base->a[std::size_t(nu)][std::size_t(i)];
      hb.add_lgamma(ai, std::min(ai, 1.0));  // numerator: y + x + a
      hb.add_lgamma(ai, std::min(ai, 1.0));  // denominator: x + a
    }
  }
  return hb;
}

struct CoordLattice {
  NbCoord coord;
  std::vector<Counts> points;
  std::vector<double> pmf;       // per point
  std::vector<double> total_pmf; // pmf of the total, by total value 0..radius
};

CoordLattice make_lattice(int m, double shape, const Vec& pcomp, double pdot,
                          double eps) {
  CoordLattice out;
  out.coord = make_nb_coord(shape, pdot, eps);
  out.points = enumerate_ball(m, out.coord.radius);
  out.pmf.resize(out.points.size());
  out.total_pmf.assign(std::size_t(out.coord.radius) + 1, 0.0);
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    out.pmf[i] = std::exp(negmn_log_pmf(out.points[i], shape, pcomp));
    std::int64_t tot = 0;
    for (auto v : out.points[i]) tot += v;
    out.total_pmf[std::size_t(tot)] += out.pmf[i];
  }
  return out;
}

}  // namespace

double log_pred_mass_negmn_dirichlet(const CountData& y, const CountData& x,
                                     const ModelSpec& spec, const FutureSpec& fut,
                                     const DirichletPriorSpec& prior) {
  return log_pred_mass_atomic(y, x, spec, fut, AtomicPrior::from(prior, spec));
}

double log_pred_mass_negmn_shrinkage(const CountData& y, const CountData& x,
                                     const ModelSpec& spec, const FutureSpec& fut,
                                     const GeneralShrinkagePriorSpec& prior) {
  return log_pred_mass_atomic(y, x, spec, fut, AtomicPrior::from(prior, spec));
}

double log_pred_mass_negmn(const CountData& y, const CountData& x, const ModelSpec& spec,
                           const FutureSpec& fut, const NmPrior& prior) {
  return log_pred_mass_atomic(y, x, spec, fut, AtomicPrior::from(prior, spec));
}

RiskEval kl_risk_lhs_exact_fn(
    const ProbParam& p, const ModelSpec& spec, const FutureSpec& fut,
    const std::function<double(const CountData& y, const CountData& x)>& log_pred,
    double trunc, const QuadFormBound& h_bound) {
  spec.validate();
  p.validate_for(spec);
  fut.validate_for(spec);

  int coords_n = spec.N + fut.n;
  double eps = trunc / double(coords_n);
  std::vector<CoordLattice> xs, ys;
  std::vector<NbCoord> coords;
  double budget = 1.0;
  for (int nu = 0; nu < spec.N; ++nu) {
    xs.push_back(make_lattice(spec.m[std::size_t(nu)], spec.r[std::size_t(nu)],
                              p.p[std::size_t(nu)], p.pdot(nu), eps));
    coords.push_back(xs.back().coord);
    budget *= double(xs.back().points.size());
  }
  for (int nu = 0; nu < fut.n; ++nu) {
    ys.push_back(make_lattice(spec.m[std::size_t(nu)], fut.s[std::size_t(nu)],
                              p.p[std::size_t(nu)], p.pdot(nu), eps));
    coords.push_back(ys.back().coord);
    budget *= double(ys.back().points.size());
  }
  if (budget > 2e7)
    throw resource_error("kl_risk_lhs_exact_fn: joint truncated lattice too large");

  CountData x, y;
  x.x.resize(std::size_t(spec.N));
  y.x.resize(std::size_t(spec.N));
  for (int nu = 0; nu < spec.N; ++nu)
    y.x[std::size_t(nu)].assign(std::size_t(spec.m[std::size_t(nu)]), 0);

  // per-point log g tables for the future populations
  std::vector<std::vector<double>> log_g(std::size_t(fut.n));
  for (int nu = 0; nu < fut.n; ++nu) {
    log_g[std::size_t(nu)].resize(ys[std::size_t(nu)].points.size());
    for (std::size_t i = 0; i < ys[std::size_t(nu)].points.size(); ++i)
      log_g[std::size_t(nu)][i] = negmn_log_pmf(
          ys[std::size_t(nu)].points[i], fut.s[std::size_t(nu)], p.p[std::size_t(nu)]);
  }

  std::vector<std::size_t> pos(std::size_t(coords_n), 0);
  double value = 0.0;
  for (;;) {
    double weight = 1.0, lg = 0.0;
    for (int nu = 0; nu < spec.N; ++nu) {
      x.x[std::size_t(nu)] = xs[std::size_t(nu)].points[pos[std::size_t(nu)]];
      weight *= xs[std::size_t(nu)].pmf[pos[std::size_t(nu)]];
    }
    for (int nu = 0; nu < fut.n; ++nu) {
      std::size_t j = pos[std::size_t(spec.N + nu)];
      y.x[std::size_t(nu)] = ys[std::size_t(nu)].points[j];
      weight *= ys[std::size_t(nu)].pmf[j];
      lg += log_g[std::size_t(nu)][j];
    }
    value += weight * (lg - log_pred(y, x));

    int c = coords_n - 1;
    auto size_of = [&](int idx) {
      return idx < spec.N ? xs[std::size_t(idx)].points.size()
                          : ys[std::size_t(idx - spec.N)].points.size();
    };
    while (c >= 0 && ++pos[std::size_t(c)] == size_of(c)) {
      pos[std::size_t(c)] = 0;
      --c;
    }
    if (c < 0) break;
  }

  RiskEval out;
  out.value = value;
  out.error_bound = joint_tail_bound(coords, h_bound);
  return out;
}

RiskEval kl_risk_lhs_exact(const ProbParam& p, const ModelSpec& spec,
                           const FutureSpec& fut, const NmPrior& prior, double trunc) {
  AtomicPrior ap = AtomicPrior::from(prior, spec);
  ap.require_proper(spec);
  QuadFormBound hb = h_bound_negmn(spec, fut, p, ap);

  if (ap.terms.size() > 1) {
    auto fn = [&](const CountData& y, const CountData& x) {
      return log_pred_mass_atomic(y, x, spec, fut, ap);
    };
    return kl_risk_lhs_exact_fn(p, spec, fut, fn, trunc, hb);
  }

  // single mixture term: populations decouple, so the double expectation
  // reduces to per-population lattice sums
  spec.validate();
  p.validate_for(spec);
  fut.validate_for(spec);
  int coords_n = spec.N + fut.n;
  double eps = trunc / double(coords_n);
  std::vector<NbCoord> coords;

  // the combinatorial coefficients of the true density and of the predictive
  // mass cancel in the log ratio, leaving E[s log p0 + sum Y_i log p_i] with
  // E[Y_i] = s p_i / p0 in closed form
  double value = 0.0;
  for (int nu = 0; nu < fut.n; ++nu) {
    double s = fut.s[std::size_t(nu)];
    double p0 = p.p0[std::size_t(nu)];
    double acc = s * std::log(p0);
    for (double v : p.p[std::size_t(nu)]) acc += s * v / p0 * std::log(v);
    value += acc;
  }

  for (int nu = 0; nu < spec.N; ++nu) {
    double r = spec.r[std::size_t(nu)];
    double s = future_shape(fut, nu);
    double a0 = ap.base->a0[std::size_t(nu)] + ap.terms[0].shift[std::size_t(nu)];
    double adot = ap.base->adot(nu);
    const Vec& a = ap.base->a[std::size_t(nu)];

    CoordLattice lx = make_lattice(spec.m[std::size_t(nu)], r, p.p[std::size_t(nu)],
                                   p.pdot(nu), eps);
    coords.push_back(lx.coord);

    if (nu < fut.n) {
      CoordLattice ly = make_lattice(spec.m[std::size_t(nu)], s, p.p[std::size_t(nu)],
                                     p.pdot(nu), eps);
      coords.push_back(ly.coord);
      // E[prefix_nu + num_nu]: joint over (x_nu, y_nu)
      for (std::size_t ix = 0; ix < lx.points.size(); ++ix) {
        const Counts& xv = lx.points[ix];
        double xrow = 0.0, ax_cache = 0.0;
        for (auto v : xv) xrow += double(v);
        (void)ax_cache;
        for (std::size_t iy = 0; iy < ly.points.size(); ++iy) {
          const Counts& yv = ly.points[iy];
          double w = lx.pmf[ix] * ly.pmf[iy];
          double yrow = 0.0;
          for (auto v : yv) yrow += double(v);
          double term =
              log_gamma(s + r + a0) - log_gamma(s + r + a0 + yrow + xrow + adot);
          for (std::size_t i = 0; i < a.size(); ++i)
            term += log_gamma(double(yv[i]) + double(xv[i]) + a[i]);
          value -= w * term;  // minus: this is part of log ghat
        }
      }
    } else {
      for (std::size_t ix = 0; ix < lx.points.size(); ++ix) {
        const Counts& xv = lx.points[ix];
        double xrow = 0.0;
        for (auto v : xv) xrow += double(v);
        double term = log_gamma(s + r + a0) - log_gamma(s + r + a0 + xrow + adot);
        for (std::size_t i = 0; i < a.size(); ++i)
          term += log_gamma(double(xv[i]) + a[i]);
        value -= lx.pmf[ix] * term;
      }
    }
    // denominator part: + E[den_nu] over x_nu only
    for (std::size_t ix = 0; ix < lx.points.size(); ++ix) {
      const Counts& xv = lx.points[ix];
      double xrow = 0.0;
      for (auto v : xv) xrow += double(v);
      double term = log_gamma(r + a0) - log_gamma(r + a0 + xrow + adot);
      for (std::size_t i = 0; i < a.size(); ++i)
        term += log_gamma(double(xv[i]) + a[i]);
      value += lx.pmf[ix] * term;
    }
  }

  RiskEval out;
  out.value = value;
  out.error_bound = joint_tail_bound(coords, hb);
  return out;
}

McRiskEval kl_risk_lhs_mc(const ProbParam& p, const ModelSpec& spec,
                          const FutureSpec& fut, const NmPrior& prior,
                          std::int64_t reps, RngSpec rng) {
  AtomicPrior ap = AtomicPrior::from(prior, spec);
  ap.require_proper(spec);
  spec.validate();
  p.validate_for(spec);
  fut.validate_for(spec);

  std::vector<double> draws(std::size_t(reps), 0.0);
  CounterRng gen(rng);
  CountData y;
  y.x.resize(std::size_t(spec.N));
  for (std::int64_t rep = 0; rep < reps; ++rep) {
    CountData x = negmn_sample_all(gen, spec, p);
    double lg = 0.0;
    for (int nu = 0; nu < spec.N; ++nu) {
      if (nu < fut.n) {
        y.x[std::size_t(nu)] =
            negmn_sample(gen, fut.s[std::size_t(nu)], p.p[std::size_t(nu)]);
        lg += negmn_log_pmf(y.x[std::size_t(nu)], fut.s[std::size_t(nu)],
                            p.p[std::size_t(nu)]);
      } else {
        y.x[std::size_t(nu)].assign(std::size_t(spec.m[std::size_t(nu)]), 0);
      }
    }
    draws[std::size_t(rep)] = lg - log_pred_mass_atomic(y, x, spec, fut, ap);
  }
  MeanSe ms = batch_mean_se(draws);
  return {ms.mean, ms.se};
}

namespace {

// posterior mixture weights given the totals; only the a0-shift differs per
// term, so everything else cancels
std::vector<double> posterior_term_weights(const AtomicPrior& ap, const ModelSpec& spec,
                                           const Vec& shape, const Vec& totals) {
  std::vector<double> lw(ap.terms.size());
  for (std::size_t j = 0; j < ap.terms.size(); ++j) {
    double acc = ap.terms[j].log_mass;
    for (int nu = 0; nu < spec.N; ++nu) {
      double a0 = ap.base->a0[std::size_t(nu)] + ap.terms[j].shift[std::size_t(nu)] +
                  shape[std::size_t(nu)];
      double b = totals[std::size_t(nu)] + ap.base->adot(nu);
      acc += log_gamma(a0) - log_gamma(a0 + b);
    }
    lw[j] = acc;
  }
  double lse = log_sum_exp(lw);
  std::vector<double> w(lw.size());
  for (std::size_t j = 0; j < lw.size(); ++j) w[j] = std::exp(lw[j] - lse);
  return w;
}

struct KTailTerms {
  double d_tail = 0.0;      // in-lattice z, degrees beyond k_max
  double theta_tail = 0.0;  // geometric part beyond k_max
  double z_tail = 0.0;      // z beyond the lattice, all degrees
  double corr = 0.0;        // neglected log-correction for aggregated degrees
};

// sum_{k > kmax} (1/k) (b + k - 1/2)^(-delta) <= c_b * kmax^(-delta)/delta
double k_tail_integral(double b, double delta, int k_max) {
  double cb = 1.0;
  if (b < 0.5) {
    double shrink = 1.0 - (0.5 - b) / double(k_max);
    cb = std::pow(shrink, -delta);
  }
  return cb * std::pow(double(k_max), -delta) / delta;
}

}  // namespace

RiskEval kl_risk_rhs_theorem4(const ProbParam& p, const ModelSpec& spec,
                              const FutureSpec& fut, const NmPrior& prior,
                              const RhsOptions& opt) {
  spec.validate();
  p.validate_for(spec);
  fut.validate_for(spec);
  AtomicPrior ap = AtomicPrior::from(prior, spec);
  ap.require_proper(spec);
  if (opt.k_max < 2 || opt.k_exact < 1 || opt.tau_nodes < 4)
    throw domain_error("kl_risk_rhs_theorem4: bad options");
  bool single = ap.terms.size() == 1;
  if (!single && spec.N > 3)
    throw resource_error("kl_risk_rhs_theorem4: mixture priors supported for small N only");

  // node evaluator returns the integrand value and accumulates its bound
  auto eval_node = [&](double tau, double* bound_out) {
    Vec shape(std::size_t(spec.N));
    for (int nu = 0; nu < spec.N; ++nu) shape[std::size_t(nu)] = fut.shape_t(spec, nu, tau);

    std::vector<CoordLattice> lat(std::size_t(spec.N));
    for (int nu = 0; nu < spec.N; ++nu)
      lat[std::size_t(nu)] =
          make_lattice(spec.m[std::size_t(nu)], shape[std::size_t(nu)],
                       p.p[std::size_t(nu)], p.pdot(nu), opt.trunc / double(spec.N));

    double node_value = 0.0, node_bound = 0.0;

    for (int nu = 0; nu < fut.n; ++nu) {
      double tp = fut.shape_tprime(nu, tau);
      if (tp == 0.0) continue;
      int m = spec.m[std::size_t(nu)];
      double pbar = p.pdot(nu);
      const Vec& a = ap.base->a[std::size_t(nu)];
      double adot = ap.base->adot(nu);
      double a_min = *std::min_element(a.begin(), a.end());

      // log-magnitude constants for the corrections
      double lp = 0.0;
      for (double v : p.p[std::size_t(nu)]) lp = std::max(lp, std::abs(std::log(v)));

      // other-population totals grid (mixture priors couple through them)
      std::vector<Vec> other_totals;    // one entry per combination
      std::vector<double> other_pmf;
      if (single) {
        other_totals.push_back(Vec(std::size_t(spec.N), 0.0));
        other_pmf.push_back(1.0);
      } else {
        other_totals.push_back(Vec(std::size_t(spec.N), 0.0));
        other_pmf.push_back(1.0);
        for (int nup = 0; nup < spec.N; ++nup) {
          if (nup == nu) continue;
          std::vector<Vec> next_t;
          std::vector<double> next_p;
          const auto& tot = lat[std::size_t(nup)].total_pmf;
          for (std::size_t c = 0; c < other_totals.size(); ++c)
            for (std::size_t t = 0; t < tot.size(); ++t) {
              Vec v = other_totals[c];
              v[std::size_t(nup)] = double(t);
              next_t.push_back(std::move(v));
              next_p.push_back(other_pmf[c] * tot[t]);
            }
          other_totals = std::move(next_t);
          other_pmf = std::move(next_p);
        }
      }

      double contrib = 0.0;

      for (std::size_t oc = 0; oc < other_totals.size(); ++oc) {
        for (std::size_t iz = 0; iz < lat[std::size_t(nu)].points.size(); ++iz) {
          const Counts& z = lat[std::size_t(nu)].points[iz];
          double wz = lat[std::size_t(nu)].pmf[iz] * other_pmf[oc];
          if (wz == 0.0) continue;
          double zrow = 0.0;
          for (auto v : z) zrow += double(v);

          Vec totals = other_totals[oc];
          totals[std::size_t(nu)] = zrow;
          std::vector<double> tw =
              single ? std::vector<double>{1.0}
                     : posterior_term_weights(ap, spec, shape, totals);

          double b = zrow + adot;
          // per-term head alpha0
          std::vector<double> head(ap.terms.size());
          for (std::size_t j = 0; j < ap.terms.size(); ++j)
            head[j] = shape[std::size_t(nu)] + ap.base->a0[std::size_t(nu)] +
                      ap.terms[j].shift[std::size_t(nu)];

          // exact composition sums for low degrees
          for (int k = 1; k <= opt.k_exact; ++k) {
            auto comps = enumerate_simplex_shell(m, k);
            double sum_k = 0.0;
            for (const auto& w : comps) {
              double log_theta = 0.0, log_mult = log_factorial(k);
              for (int i = 0; i < m; ++i) {
                log_theta += double(w[std::size_t(i)]) *
                             std::log(p.p[std::size_t(nu)][std::size_t(i)]);
                log_mult -= log_factorial(w[std::size_t(i)]);
              }
              double d = 0.0;
              for (std::size_t j = 0; j < ap.terms.size(); ++j) {
                double logd = log_gamma(b + head[j]) - log_gamma(b + head[j] + k);
                for (int i = 0; i < m; ++i) {
                  double ai = double(z[std::size_t(i)]) + a[std::size_t(i)];
                  logd += log_gamma(ai + double(w[std::size_t(i)])) - log_gamma(ai);
                }
                d += tw[j] * std::exp(logd);
              }
              sum_k += std::exp(log_mult) * kl_loss_from_log_theta(d, log_theta);
            }
            contrib += wz * sum_k / double(k);
          }

          // aggregated degrees: loss of the posterior mean of the total mass
          double log_b_base = log_gamma(b);
          double log_pbar = std::log(pbar);
          for (int k = opt.k_exact + 1; k <= opt.k_max; ++k) {
            double d = 0.0;
            for (std::size_t j = 0; j < ap.terms.size(); ++j)
              d += tw[j] * std::exp(log_gamma(b + double(k)) - log_b_base +
                                    log_gamma(b + head[j]) -
                                    log_gamma(b + head[j] + double(k)));
            contrib += wz * kl_loss_from_log_theta(d, double(k) * log_pbar) / double(k);
          }

          // degree tail beyond k_max
          double delta_min = *std::min_element(head.begin(), head.end());
          double gmax = 0.0;
          for (std::size_t j = 0; j < ap.terms.size(); ++j)
            gmax = std::max(gmax, std::exp(log_gamma(b + head[j]) - log_gamma(b)));
          node_bound += tp * wz * gmax * k_tail_integral(b, delta_min, opt.k_max);
        }
      }
      node_value += tp * contrib;

      // neglected log-corrections for the aggregated degrees
      double la = std::max(std::abs(std::log(a_min)),
                           std::log(adot + shape[std::size_t(nu)] +
                                    std::abs(ap.base->a0[std::size_t(nu)]) +
                                    double(lat[std::size_t(nu)].coord.radius) +
                                    double(opt.k_max)));
      double geo = 0.0, pk = std::pow(pbar, double(opt.k_exact + 1));
      for (int k = opt.k_exact + 1; k <= opt.k_max; ++k) {
        geo += 2.0 * pk * (la + lp);
        pk *= pbar;
      }
      node_bound += tp * geo;

      // theta terms beyond k_max (geometric)
      node_bound += tp * geometric_poly_tail(double(opt.k_max + 1) * std::log(pbar),
                                             pbar, 1.0, 0) *
                    (1.0 + la + lp);

      // z beyond the lattice: harmonic block for k <= k_max plus the moment
      // bound for the degree tail
      double harmonic = 0.0;
      for (int k = 1; k <= opt.k_max; ++k) harmonic += 1.0 / double(k);
      double eps_z = 0.0;
      for (int nup = 0; nup < spec.N; ++nup)
        eps_z += lat[std::size_t(nup)].coord.tail_moment(0);
      node_bound += tp * eps_z * (harmonic + 1.0 + la + lp);

      double delta0 = shape[std::size_t(nu)] + ap.base->a0[std::size_t(nu)];
      for (const auto& t : ap.terms) delta0 = std::min(delta0, shape[std::size_t(nu)] +
                                                                    ap.base->a0[std::size_t(nu)] +
                                                                    t.shift[std::size_t(nu)]);
      // Gamma(b+delta)/Gamma(b) <= (b+delta)^delta, with b = T + adot
      const NbCoord& cz = lat[std::size_t(nu)].coord;
      double ztail_degrees =
          geometric_poly_tail(cz.log_pmf_next, cz.q, double(cz.radius) + 1.0 + adot + delta0,
                              delta0) *
          k_tail_integral(adot, delta0, opt.k_max) * std::max(1.0, delta0);
      node_bound += tp * ztail_degrees;
    }

    if (bound_out) *bound_out = node_bound;
    return node_value;
  };

  auto [nodes, weights] = gauss_legendre_01(opt.tau_nodes);
  auto [nodes_h, weights_h] = gauss_legendre_01(std::max(2, opt.tau_nodes / 2));

  double full = 0.0, bound = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double nb = 0.0;
    full += weights[i] * eval_node(nodes[i], &nb);
    bound += weights[i] * nb;
  }
  double half = 0.0;
  for (std::size_t i = 0; i < nodes_h.size(); ++i)
    half += weights_h[i] * eval_node(nodes_h[i], nullptr);

  RiskEval out;
  out.value = full;
  out.error_bound = bound + std::abs(full - half);
  return out;
}

RiskEval kl_risk_diff_corollary3(const ProbParam& p, const ModelSpec& spec,
                                 const FutureSpec& fut,
                                 const GeneralShrinkagePriorSpec& prior_m,
                                 const DirichletPriorSpec& prior_d,
                                 const RhsOptions& opt) {
  spec.validate();
  p.validate_for(spec);
  fut.validate_for(spec);
  AtomicPrior am = AtomicPrior::from(prior_m, spec);
  AtomicPrior ad = AtomicPrior::from(prior_d, spec);
  am.require_proper(spec);
  ad.require_proper(spec);
  if (prior_m.base.a0 != prior_d.a0 || prior_m.base.a != prior_d.a)
    throw domain_error("kl_risk_diff_corollary3: the priors must share the same base");

  auto eval_node = [&](double tau, double* bound_out) {
    Vec shape(std::size_t(spec.N));
    for (int nu = 0; nu < spec.N; ++nu) shape[std::size_t(nu)] = fut.shape_t(spec, nu, tau);

    // only totals matter here
    std::vector<NbCoord> coords(std::size_t(spec.N));
    std::vector<std::vector<double>> tot_pmf(std::size_t(spec.N));
    for (int nu = 0; nu < spec.N; ++nu) {
      coords[std::size_t(nu)] =
          make_nb_coord(shape[std::size_t(nu)], p.pdot(nu), opt.trunc / double(spec.N));
      auto& tp = tot_pmf[std::size_t(nu)];
      tp.assign(std::size_t(coords[std::size_t(nu)].radius) + 1, 0.0);
      double lpmf = shape[std::size_t(nu)] * std::log(1.0 - p.pdot(nu));
      for (std::int64_t t = 0; t <= coords[std::size_t(nu)].radius; ++t) {
        tp[std::size_t(t)] = std::exp(lpmf);
        lpmf += std::log(p.pdot(nu) * (shape[std::size_t(nu)] + double(t)) /
                         (double(t) + 1.0));
      }
    }

    double node_value = 0.0, node_bound = 0.0;
    Vec totals(std::size_t(spec.N), 0.0);
    std::vector<std::size_t> pos(std::size_t(spec.N), 0);
    for (;;) {
      double wz = 1.0;
      for (int nu = 0; nu < spec.N; ++nu) {
        totals[std::size_t(nu)] = double(pos[std::size_t(nu)]);
        wz *= tot_pmf[std::size_t(nu)][pos[std::size_t(nu)]];
      }
      std::vector<double> twm = posterior_term_weights(am, spec, shape, totals);

      for (int nu = 0; nu < fut.n; ++nu) {
        double tp = fut.shape_tprime(nu, tau);
        if (tp == 0.0) continue;
        double adot = am.base->adot(nu);
        double b = totals[std::size_t(nu)] + adot;
        double head_d = shape[std::size_t(nu)] + prior_d.a0[std::size_t(nu)];
        double pbar = p.pdot(nu);
        double log_pbar = std::log(pbar);
        double acc = 0.0;
        for (int k = 1; k <= opt.k_max; ++k) {
          double log_theta = double(k) * log_pbar;
          double dm = 0.0;
          for (std::size_t j = 0; j < am.terms.size(); ++j) {
            double head = head_d + am.terms[j].shift[std::size_t(nu)];
            dm += twm[j] * std::exp(log_gamma(b + double(k)) - log_gamma(b) +
                                    log_gamma(b + head) - log_gamma(b + head + double(k)));
          }
          double dd = std::exp(log_gamma(b + double(k)) - log_gamma(b) +
                               log_gamma(b + head_d) - log_gamma(b + head_d + double(k)));
          acc += (kl_loss_from_log_theta(dm, log_theta) -
                  kl_loss_from_log_theta(dd, log_theta)) /
                 double(k);
        }
        node_value += tp * wz * acc;

        // degree tails of both priors plus the theta log terms
        double delta_min = head_d;
        double gmax = std::exp(log_gamma(b + head_d) - log_gamma(b));
        for (std::size_t j = 0; j < am.terms.size(); ++j) {
          double head = head_d + am.terms[j].shift[std::size_t(nu)];
          delta_min = std::min(delta_min, head);
          gmax = std::max(gmax, std::exp(log_gamma(b + head) - log_gamma(b)));
        }
        node_bound += 2.0 * tp * wz * gmax * k_tail_integral(b, delta_min, opt.k_max);
        double la = std::log(adot + shape[std::size_t(nu)] +
                             std::abs(prior_d.a0[std::size_t(nu)]) + b + double(opt.k_max));
        node_bound += 2.0 * tp * wz *
                      geometric_poly_tail(double(opt.k_max + 1) * std::log(pbar), pbar,
                                          1.0, 0) *
                      (1.0 + la);
      }

      int c = spec.N - 1;
      while (c >= 0 && ++pos[std::size_t(c)] == tot_pmf[std::size_t(c)].size()) {
        pos[std::size_t(c)] = 0;
        --c;
      }
      if (c < 0) break;
    }

    // totals beyond the lattice
    double harmonic = 0.0;
    for (int k = 1; k <= opt.k_max; ++k) harmonic += 1.0 / double(k);
    double eps_z = 0.0;
    for (int nu = 0; nu < spec.N; ++nu) eps_z += coords[std::size_t(nu)].tail_moment(0);
    double tp_max = 0.0;
    for (int nu = 0; nu < fut.n; ++nu)
      tp_max = std::max(tp_max, std::abs(fut.shape_tprime(nu, tau)));
    node_bound += 2.0 * tp_max * double(fut.n) * eps_z * (harmonic + 4.0);
    for (int nu = 0; nu < fut.n; ++nu) {
      double tp = fut.shape_tprime(nu, tau);
      if (tp == 0.0) continue;
      double adot = am.base->adot(nu);
      double delta0 = shape[std::size_t(nu)] + prior_d.a0[std::size_t(nu)];
      const NbCoord& cz = coords[std::size_t(nu)];
      node_bound += 2.0 * tp *
                    geometric_poly_tail(cz.log_pmf_next, cz.q,
                                        double(cz.radius) + 1.0 + adot + delta0, delta0) *
                    k_tail_integral(adot, delta0, opt.k_max) * std::max(1.0, delta0);
    }

    if (bound_out) *bound_out = node_bound;
    return node_value;
  };

  auto [nodes, weights] = gauss_legendre_01(opt.tau_nodes);
  auto [nodes_h, weights_h] = gauss_legendre_01(std::max(2, opt.tau_nodes / 2));
  double full = 0.0, bound = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double nb = 0.0;
    full += weights[i] * eval_node(nodes[i], &nb);
    bound += weights[i] * nb;
  }
  double half = 0.0;
  for (std::size_t i = 0; i < nodes_h.size(); ++i)
    half += weights_h[i] * eval_node(nodes_h[i], nullptr);

  RiskEval out;
  out.value = full;
  out.error_bound = bound + std::abs(full - half);
  return out;
}

}  // namespace negmn
