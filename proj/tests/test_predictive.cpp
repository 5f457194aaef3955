#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "negmn/predictive.hpp"
#include "testutil.hpp"

using namespace negmn;

namespace {

struct SimSetup {
  ModelSpec spec;
  TableModel tm;
  DirichletPriorSpec dir;
  ShrinkagePriorSpec sh;
};

SimSetup sim_setup(Vec r = {5.0, 5.0}) {
  SimSetup s;
  s.spec.N = 2;
  s.spec.m = {3, 3};
  s.spec.r = std::move(r);
  s.tm.L = 2;
  s.tm.nu = {{0}, {0, 1}};
  s.tm.l = {1, 1};
  s.tm.build(s.spec);
  s.dir.a0 = {-1.0, -1.0};
  s.dir.a = {Vec(3, 0.5), Vec(3, 0.5)};
  s.sh.alpha = 1.0;
  s.sh.beta = 1.0;
  s.sh.gamma = {1.0, 1.0};
  s.sh.base = s.dir;
  return s;
}

CountData random_counts(CounterRng& rng, const ModelSpec& spec, double cap = 0.7) {
  ProbParam p = negmn::test::random_prob(rng, spec, cap);
  return negmn_sample_all(rng, spec, p);
}

}  // namespace

TEST_CASE("jeffreys prior values") {
  ModelSpec spec;
  spec.N = 2;
  spec.m = {3, 3};
  spec.r = {5.0, 5.0};
  DirichletPriorSpec j = jeffreys_prior(spec);
  CHECK(j.a0 == Vec{-1.0, -1.0});
  CHECK(j.a[0] == Vec(3, 0.5));
  CHECK(j.a[1] == Vec(3, 0.5));

  ModelSpec one;
  one.N = 1;
  one.m = {1};
  one.r = {2.0};
  CHECK(jeffreys_prior(one).a0[0] == 0.0);

  // propriety r + a0 = 4 > 0 passes the guard
  j.require_proper(spec);
}

TEST_CASE("propriety guard rejects r + a0 <= 0") {
  SimSetup s = sim_setup({1.0, 5.0});  // r1 + a0 = 0
  CounterRng rng({70, 0});
  CountData x = random_counts(rng, s.spec);
  auto support = enumerate_tables(s.tm);
  CHECK_THROWS_AS(log_pred_mass_dirichlet(support[0], x, s.spec, s.tm, s.dir),
                  domain_error);
  QuadratureSpec quad;
  CHECK_THROWS_AS(log_pred_mass_shrinkage(support[0], x, s.spec, s.tm, s.sh, quad),
                  domain_error);
  CHECK_THROWS_AS(
      posterior_mc_mass(support[0], x, s.spec, s.tm, s.sh, {1, 1}, 100, 10),
      domain_error);
}

TEST_CASE("one-cell table reduces to a posterior-mean ratio") {
  ModelSpec spec;
  spec.N = 1;
  spec.m = {1};
  spec.r = {2.0};
  TableModel tm;
  tm.L = 1;
  tm.nu = {{0}};
  tm.l = {1};
  tm.build(spec);
  DirichletPriorSpec prior;
  prior.a0 = {0.5};
  prior.a = {{0.7}};

  for (std::int64_t xv : {0, 3, 11}) {
    CountData x{{{xv}}};
    TableCounts w0, w1;
    w0.w = {{1, 0}};
    w1.w = {{0, 1}};
    double denom = spec.r[0] + prior.a0[0] + double(xv) + prior.a[0][0];
    CHECK(std::exp(log_pred_mass_dirichlet(w0, x, spec, tm, prior)) ==
          doctest::Approx((spec.r[0] + prior.a0[0]) / denom).epsilon(1e-12));
    CHECK(std::exp(log_pred_mass_dirichlet(w1, x, spec, tm, prior)) ==
          doctest::Approx((double(xv) + prior.a[0][0]) / denom).epsilon(1e-12));
  }
}

TEST_CASE("closed-form mass equals an independent transcription") {
  SimSetup s = sim_setup();
  CounterRng rng({71, 0});
  auto support = enumerate_tables(s.tm);
  for (int trial = 0; trial < 50; ++trial) {
    CountData x = random_counts(rng, s.spec);
    const TableCounts& w = support[std::size_t(rng.uniform() * 63.999)];
    TableSuffStats st = table_suff_stats(w, s.tm, s.spec);
    double expect = st.log_coef;
    for (int nu = 0; nu < 2; ++nu) {
      double r = s.spec.r[std::size_t(nu)], a0 = s.dir.a0[std::size_t(nu)];
      double adot = 1.5, xrow = double(x.row_sum(nu));
      double lt = double(s.tm.trials_touching(nu));
      expect += std::lgamma(st.s[std::size_t(nu)][0] + r + a0) - std::lgamma(r + a0);
      expect -= std::lgamma(lt + r + a0 + xrow + adot) - std::lgamma(r + a0 + xrow + adot);
      for (int i = 0; i < 3; ++i)
        expect += std::lgamma(st.s[std::size_t(nu)][std::size_t(i) + 1] +
                              double(x.x[std::size_t(nu)][std::size_t(i)]) + 0.5) -
                  std::lgamma(double(x.x[std::size_t(nu)][std::size_t(i)]) + 0.5);
    }
    CHECK(log_pred_mass_dirichlet(w, x, s.spec, s.tm, s.dir) ==
          doctest::Approx(expect).epsilon(1e-13));
  }
}

TEST_CASE("predictive masses sum to one over the support") {
  SimSetup s = sim_setup();
  CounterRng rng({72, 0});
  auto support = enumerate_tables(s.tm);
  QuadratureSpec quad;

  for (int trial = 0; trial < 3; ++trial) {
    CountData x = random_counts(rng, s.spec);
    double dir_total = 0.0, sh_total = 0.0;
    for (const auto& w : support) {
      dir_total += std::exp(log_pred_mass_dirichlet(w, x, s.spec, s.tm, s.dir));
      sh_total += std::exp(log_pred_mass_shrinkage(w, x, s.spec, s.tm, s.sh, quad).log_mass);
    }
    CHECK(std::abs(dir_total - 1.0) <= 1e-10);
    CHECK(std::abs(sh_total - 1.0) <= 1e-8);
  }
}

TEST_CASE("shrinkage mass collapses to the Dirichlet mass as gamma vanishes") {
  SimSetup s = sim_setup();
  s.sh.gamma = {1e-8, 1e-8};
  CounterRng rng({73, 0});
  CountData x = random_counts(rng, s.spec);
  auto support = enumerate_tables(s.tm);
  QuadratureSpec quad;
  for (std::size_t i = 0; i < support.size(); i += 7) {
    double a = log_pred_mass_dirichlet(support[i], x, s.spec, s.tm, s.dir);
    double b = log_pred_mass_shrinkage(support[i], x, s.spec, s.tm, s.sh, quad).log_mass;
    CHECK(std::abs(a - b) <= 1e-6);
  }
}

TEST_CASE("gibbs sampler agrees with the closed Dirichlet case") {
  SimSetup s = sim_setup();
  CounterRng rng({74, 0});
  auto support = enumerate_tables(s.tm);
  for (int trial = 0; trial < 5; ++trial) {
    CountData x = random_counts(rng, s.spec);
    const TableCounts& w = support[std::size_t(rng.uniform() * 63.999)];
    double closed = std::exp(log_pred_mass_dirichlet(w, x, s.spec, s.tm, s.dir));
    McMassResult mc = posterior_mc_mass_dirichlet(w, x, s.spec, s.tm, s.dir,
                                                  {900 + std::uint64_t(trial), 4}, 20000);
    CHECK(std::abs(mc.mass - closed) <= 3.0 * mc.std_error);
  }
}

TEST_CASE("gibbs sampler tracks the quadrature mass") {
  SimSetup s = sim_setup();
  CounterRng rng({75, 0});
  auto support = enumerate_tables(s.tm);
  QuadratureSpec quad;
  for (int trial = 0; trial < 5; ++trial) {
    CountData x = random_counts(rng, s.spec);
    const TableCounts& w = support[std::size_t(rng.uniform() * 63.999)];
    double quad_mass =
        std::exp(log_pred_mass_shrinkage(w, x, s.spec, s.tm, s.sh, quad).log_mass);
    McMassResult mc = posterior_mc_mass(w, x, s.spec, s.tm, s.sh,
                                        {1700 + std::uint64_t(trial), 9}, 20000, 10000);
    CHECK(std::abs(mc.mass - quad_mass) <= 3.0 * mc.std_error);
  }
}

TEST_CASE("doubling the retained samples shrinks the standard error") {
  SimSetup s = sim_setup();
  CounterRng rng({76, 0});
  CountData x = random_counts(rng, s.spec);
  auto support = enumerate_tables(s.tm);
  const TableCounts& w = support[17];
  McMassResult a = posterior_mc_mass(w, x, s.spec, s.tm, s.sh, {33, 5}, 20000, 10000);
  McMassResult b = posterior_mc_mass(w, x, s.spec, s.tm, s.sh, {34, 6}, 40000, 10000);
  double ratio = b.std_error / a.std_error;
  CHECK(ratio > (1.0 / std::sqrt(2.0)) * 0.8);
  CHECK(ratio < (1.0 / std::sqrt(2.0)) * 1.2);
}
