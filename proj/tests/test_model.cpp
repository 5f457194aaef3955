#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "negmn/model.hpp"
#include "testutil.hpp"

using namespace negmn;

namespace {

TableModel sim_config(ModelSpec& spec, Vec r = {5.0, 5.0}) {
  spec.N = 2;
  spec.m = {3, 3};
  spec.r = std::move(r);
  TableModel tm;
  tm.L = 2;
  tm.nu = {{0}, {0, 1}};
  tm.l = {1, 1};
  tm.build(spec);
  return tm;
}

}  // namespace

TEST_CASE("negmn_log_pmf special values") {
  // all-zero counts: only the p0^r factor remains
  CHECK(negmn_log_pmf({0, 0}, 2.7, {0.2, 0.3}) ==
        doctest::Approx(2.7 * std::log(0.5)).epsilon(1e-14));
  // geometric special case: (1-q) q^x
  CHECK(negmn_log_pmf({3}, 1.0, {0.5}) ==
        doctest::Approx(std::log(0.0625)).epsilon(1e-14));
  CHECK_THROWS_AS(negmn_log_pmf({1}, 1.0, {1.2}), domain_error);
  CHECK_THROWS_AS(negmn_log_pmf({1, 1}, 1.0, {0.5, 0.5}), domain_error);
  CHECK_THROWS_AS(negmn_log_pmf({1}, -1.0, {0.5}), domain_error);
}

TEST_CASE("negmn_log_pmf truncated normalization") {
  // sum over x1 + x2 <= 60
  double total = 0.0;
  for (std::int64_t x1 = 0; x1 <= 60; ++x1)
    for (std::int64_t x2 = 0; x1 + x2 <= 60; ++x2)
      total += std::exp(negmn_log_pmf({x1, x2}, 2.5, {0.2, 0.3}));
  CHECK(total >= 1.0 - 1e-8);
  CHECK(total <= 1.0 + 1e-12);
}

TEST_CASE("normalization property on random small instances") {
  CounterRng rng({101, 0});
  for (int trial = 0; trial < 20; ++trial) {
    int m = 1 + int(rng.uniform() * 3);
    if (m > 3) m = 3;
    double r = 0.5 + 4.5 * rng.uniform();
    Vec p = test::random_simplex_interior(rng, m, 0.6);
    double pdot = std::accumulate(p.begin(), p.end(), 0.0);
    auto [radius, bound] = negmn_trunc_radius(r, pdot, 1e-9);
    (void)bound;
    double total = 0.0;
    for (const auto& x : enumerate_ball(m, radius))
      total += std::exp(negmn_log_pmf(x, r, p));
    CHECK(total >= 1.0 - 1e-7);
    CHECK(total <= 1.0 + 1e-7);
  }
}

TEST_CASE("negmn_sample degenerates and moments") {
  CounterRng rng({77, 0});
  for (int i = 0; i < 1000; ++i) {
    Counts x = negmn_sample(rng, 3.0, {1e-9, 1e-9});
    CHECK(x[0] == 0);
    CHECK(x[1] == 0);
  }

  const int n = 1000000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    Counts x = negmn_sample(rng, 3.0, {0.2, 0.3});
    s1 += double(x[0]);
    s2 += double(x[1]);
  }
  // E X_i = r p_i / p0; sd of the mean below 0.0031 for both cells
  double se1 = std::sqrt(3.0 * 0.2 / 0.25 * 2.0 / double(n));  // crude over-estimate
  double se2 = std::sqrt(3.0 * 0.3 / 0.25 * 2.0 / double(n));
  CHECK(std::abs(s1 / n - 1.2) < 3.0 * se1);
  CHECK(std::abs(s2 / n - 1.8) < 3.0 * se2);
}

TEST_CASE("negmn_sample empirical pmf matches the exact pmf") {
  CounterRng rng({78, 0});
  const int n = 1000000;
  std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> counts;
  for (int i = 0; i < n; ++i) {
    Counts x = negmn_sample(rng, 3.0, {0.2, 0.3});
    ++counts[{x[0], x[1]}];
  }
  int checked = 0;
  for (std::int64_t a = 0; a <= 12; ++a)
    for (std::int64_t b = 0; b <= 12; ++b) {
      double pk = std::exp(negmn_log_pmf({a, b}, 3.0, {0.2, 0.3}));
      if (pk <= 1e-3) continue;
      ++checked;
      auto it = counts.find({a, b});
      double freq = it == counts.end() ? 0.0 : double(it->second) / n;
      double sd = std::sqrt(pk * (1.0 - pk) / n);
      CHECK(std::abs(freq - pk) < 4.0 * sd);
    }
  CHECK(checked > 20);
}

TEST_CASE("table_s definition and partition of trials") {
  ModelSpec spec;
  TableModel tm = sim_config(spec);

  // population untouched by any table reports zero exposures
  ModelSpec spec3;
  spec3.N = 3;
  spec3.m = {2, 2, 2};
  spec3.r = {1.0, 1.0, 1.0};
  TableModel tm3;
  tm3.L = 1;
  tm3.nu = {{0, 1}};
  tm3.l = {2};
  tm3.build(spec3);
  TableCounts w3;
  w3.w = {Counts(9, 0)};
  w3.w[0][4] = 2;
  for (int i = 0; i <= 2; ++i) CHECK(table_s(w3, tm3, i, 2) == 0);

  // partition: summing exposures over i recovers the trials touching nu
  CounterRng rng({5, 1});
  ProbParam p = test::random_prob(rng, spec, 0.7);
  TableCounts w = table_sample(rng, tm, spec, p);
  for (int nu = 0; nu < spec.N; ++nu) {
    std::int64_t s = 0;
    for (int i = 0; i <= spec.m[std::size_t(nu)]; ++i) s += table_s(w, tm, i, nu);
    CHECK(s == tm.trials_touching(nu));
  }
  CHECK_THROWS_AS(table_s(w, tm, 4, 0), domain_error);

  // brute force against the index-set definition on the two-table config
  for (int nu = 0; nu < 2; ++nu)
    for (int i = 0; i <= 3; ++i) {
      std::int64_t direct = 0;
      // table 0 is the vector over population 0, table 1 the 4x4 grid
      if (nu == 0) {
        direct += w.w[0][std::size_t(i)];
        for (int j = 0; j <= 3; ++j) direct += w.w[1][std::size_t(i * 4 + j)];
      } else {
        for (int j = 0; j <= 3; ++j) direct += w.w[1][std::size_t(j * 4 + i)];
      }
      CHECK(table_s(w, tm, i, nu) == direct);
    }
}

TEST_CASE("table_log_pmf: one-trial categorical reduction") {
  ModelSpec spec;
  spec.N = 1;
  spec.m = {3};
  spec.r = {2.0};
  TableModel tm;
  tm.L = 1;
  tm.nu = {{0}};
  tm.l = {1};
  tm.build(spec);
  ProbParam p = ProbParam::from({{0.1, 0.2, 0.3}});
  Vec cell = {0.4, 0.1, 0.2, 0.3};
  for (int i = 0; i <= 3; ++i) {
    TableCounts w;
    w.w = {Counts(4, 0)};
    w.w[0][std::size_t(i)] = 1;
    CHECK(table_log_pmf(w, tm, spec, p) ==
          doctest::Approx(std::log(cell[std::size_t(i)])).epsilon(1e-14));
  }
}

TEST_CASE("factorized table pmf equals the direct product form") {
  CounterRng rng({6, 0});
  ModelSpec spec;
  TableModel tm = sim_config(spec);
  for (int trial = 0; trial < 1000; ++trial) {
    ProbParam p = test::random_prob(rng, spec, 0.8);
    TableCounts w = table_sample(rng, tm, spec, p);
    double factor = table_log_pmf(w, tm, spec, p);
    double direct = test::table_log_pmf_direct(w, tm, spec, p);
    CHECK(std::abs(factor - direct) <= 1e-12);
  }
}

TEST_CASE("table pmf sums to one over the enumerated support") {
  ModelSpec spec;
  TableModel tm = sim_config(spec);
  CounterRng rng({61, 0});
  ProbParam p = test::random_prob(rng, spec, 0.75);
  auto support = enumerate_tables(tm);
  CHECK(support.size() == 64);
  double total = 0.0;
  for (const auto& w : support) total += std::exp(table_log_pmf(w, tm, spec, p));
  CHECK(std::abs(total - 1.0) <= 1e-10);
}

TEST_CASE("table_sample: single trial occupies one cell; frequencies match") {
  ModelSpec spec;
  TableModel tm = sim_config(spec);
  CounterRng rng({62, 0});
  ProbParam p = test::random_prob(rng, spec, 0.7);

  TableCounts w = table_sample(rng, tm, spec, p);
  for (int lam = 0; lam < 2; ++lam) {
    std::int64_t nonzero = 0;
    for (auto v : w.w[std::size_t(lam)]) nonzero += v != 0 ? 1 : 0;
    CHECK(nonzero == 1);
  }

  // chi-square goodness of fit per table at level 1e-3
  const int n = 100000;
  std::vector<double> c0(4, 0.0), c1(16, 0.0);
  for (int i = 0; i < n; ++i) {
    TableCounts d = table_sample(rng, tm, spec, p);
    for (std::size_t j = 0; j < 4; ++j) c0[j] += double(d.w[0][j]);
    for (std::size_t j = 0; j < 16; ++j) c1[j] += double(d.w[1][j]);
  }
  Vec cell0 = {p.p0[0], p.p[0][0], p.p[0][1], p.p[0][2]};
  double chi0 = 0.0;
  for (std::size_t j = 0; j < 4; ++j) {
    double e = n * cell0[j];
    chi0 += (c0[j] - e) * (c0[j] - e) / e;
  }
  CHECK(chi0 < 16.2662);  // chi2(3) at 0.999
  Vec cell1(16);
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b)
      cell1[a * 4 + b] = (a == 0 ? p.p0[0] : p.p[0][a - 1]) *
                         (b == 0 ? p.p0[1] : p.p[1][b - 1]);
  double chi1 = 0.0;
  for (std::size_t j = 0; j < 16; ++j) {
    double e = n * cell1[j];
    chi1 += (c1[j] - e) * (c1[j] - e) / e;
  }
  CHECK(chi1 < 37.6973);  // chi2(15) at 0.999
}

TEST_CASE("hudson identity: zero function and closed-form case") {
  ModelSpec spec;
  spec.N = 1;
  spec.m = {1};
  spec.r = {2.0};
  ProbParam p = ProbParam::from({{0.3}});

  auto zero = [](const RaggedCounts&) { return 0.0; };
  auto [l0, r0] = hudson_lhs_rhs(zero, spec, p, 0, 0, 1e-10);
  CHECK(l0 == 0.0);
  CHECK(r0 == 0.0);

  // phi = 1{x >= 1}: both sides equal sum_{x>=1} pmf(x)/p
  auto ind = [](const RaggedCounts& x) { return x[0][0] >= 1 ? 1.0 : 0.0; };
  auto [lhs, rhs] = hudson_lhs_rhs(ind, spec, p, 0, 0, 1e-12);
  double oracle = 0.0;
  for (std::int64_t x = 1; x <= 200; ++x)
    oracle += std::exp(negmn_log_pmf({x}, 2.0, {0.3})) / 0.3;
  CHECK(lhs == doctest::Approx(oracle).epsilon(1e-10));
  CHECK(rhs == doctest::Approx(oracle).epsilon(1e-8));
  CHECK(std::abs(lhs - rhs) <= 1e-8);
}

TEST_CASE("hudson identity on a random two-population function") {
  ModelSpec spec;
  spec.N = 2;
  spec.m = {2, 1};
  spec.r = {1.7, 2.4};
  ProbParam p = ProbParam::from({{0.15, 0.2}, {0.3}});

  // deterministic pseudo-random bounded phi supported on x_{0,0} >= 1
  auto phi = [](const RaggedCounts& x) {
    if (x[0][0] == 0) return 0.0;
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& row : x)
      for (auto v : row) {
        h ^= std::uint64_t(v) + 1;
        h *= 1099511628211ull;
      }
    return double(h % 10007) / 10007.0;
  };
  auto [lhs, rhs] = hudson_lhs_rhs(phi, spec, p, 0, 0, 1e-10);
  CHECK(std::abs(lhs - rhs) <= 1e-6);

  // violating the support contract is detected
  auto bad = [](const RaggedCounts&) { return 1.0; };
  CHECK_THROWS_AS(hudson_lhs_rhs(bad, spec, p, 0, 0, 1e-8), contract_error);
}

TEST_CASE("sampler streams are bit-identical for equal RngSpec") {
  ModelSpec spec;
  TableModel tm = sim_config(spec);
  CounterRng a({123, 456}), b({123, 456});
  ProbParam p = ProbParam::from({{0.2, 0.2, 0.2}, {0.1, 0.2, 0.3}});
  for (int i = 0; i < 200; ++i) {
    CHECK(negmn_sample(a, 5.0, p.p[0]) == negmn_sample(b, 5.0, p.p[0]));
    CHECK(table_sample(a, tm, spec, p).w == table_sample(b, tm, spec, p).w);
  }
}
