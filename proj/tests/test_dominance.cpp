#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <vector>

#include "negmn/dominance.hpp"
#include "testutil.hpp"

using namespace negmn;
using Rational = boost::multiprecision::cpp_rational;

namespace {

// Exact re-transcription of the two-branch condition for the EB-ML schedule
// with atilde = 1 and balanced m (so the schedule ratio infimum is 1). Inputs
// are converted from doubles, which are dyadic rationals, so the evaluation
// is exact.
struct RationalThm1 {
  Rational r_lo, r_hi, c_lo, cc, q, n, sum_m_r, m_bar, r_sum;

  RationalThm1(const ModelSpec& spec, int n_pop) {
    n = n_pop;
    r_lo = Rational(spec.r[0]);
    r_hi = r_lo;
    r_sum = 0;
    for (int nu = 0; nu < n_pop; ++nu) {
      Rational rv(spec.r[std::size_t(nu)]);
      r_lo = std::min(r_lo, rv);
      r_hi = std::max(r_hi, rv);
      r_sum += rv;
    }
    sum_m_r = 0;
    m_bar = 0;
    for (int nu = 0; nu < spec.N; ++nu) {
      sum_m_r += Rational(spec.m[std::size_t(nu)]) * Rational(spec.r[std::size_t(nu)]);
      if (nu < n_pop) m_bar = std::max(m_bar, Rational(spec.m[std::size_t(nu)]));
    }
    c_lo = Rational(spec.m[0]);  // all-ones weights: row sum = m
    for (int nu = 0; nu < n_pop; ++nu)
      c_lo = std::min(c_lo, Rational(spec.m[std::size_t(nu)]));
    cc = 1;
    Rational ratio = r_lo / r_hi;
    q = 2 * ratio * ratio * (c_lo - 3 * cc);  // rho = 1 for balanced m
  }

  Rational delta_bar(std::int64_t xp1) const {
    // balanced m: every population has m_bar + sum(m r)/x
    return m_bar + sum_m_r / xp1;
  }

  bool ok_variant1(std::int64_t x) const {
    Rational db = delta_bar(x + 1);
    Rational base = (q - c_lo) * db + r_lo * q;
    if (cc * db <= q) return base >= 0;
    return n * base >= x * (cc * db - q);
  }

  bool ok_variant2(std::int64_t x) const {
    Rational db = delta_bar(x + 1);
    Rational q2 = 2 * (c_lo - 3 * cc);  // rho = 1
    if (cc * db <= q2) return q2 - (c_lo - r_lo * cc) >= 0;
    return n * (q2 - (c_lo - r_lo * cc)) * db >= (r_sum + x) * (cc * db - q2);
  }
};

LossWeights ones_weights(const ModelSpec& spec, int n) {
  LossWeights w;
  w.n = n;
  for (int nu = 0; nu < spec.N; ++nu)
    w.c.push_back(Vec(std::size_t(spec.m[std::size_t(nu)]), 1.0));
  return w;
}

}  // namespace

TEST_CASE("thm1 preamble failures") {
  ModelSpec spec;
  spec.N = 2;
  spec.m = {7, 7};
  spec.r = {12.0, 12.0};
  ShrinkageSchedule sched = ShrinkageSchedule::eb_ml(spec, Vec(2, 1.0));

  LossWeights zero;
  zero.n = 2;
  zero.c = {Vec(7, 0.0), Vec(7, 0.0)};
  DominanceVerdict v = check_thm1(spec, zero, sched, 1, 100);
  CHECK_FALSE(v.holds);  // max cell weight must be strictly positive

  // one large cell makes 3*max-cell exceed the smallest row sum
  LossWeights lopsided = ones_weights(spec, 2);
  lopsided.c[0][0] = 5.0;
  CHECK_FALSE(check_thm1(spec, lopsided, sched, 1, 100).holds);

  // small shapes fail the preamble
  ModelSpec low = spec;
  low.r = {2.0, 12.0};
  ShrinkageSchedule sl = ShrinkageSchedule::eb_ml(low, Vec(2, 1.0));
  CHECK_FALSE(check_thm1(low, ones_weights(low, 2), sl, 1, 100).holds);

  CHECK_THROWS_AS(check_thm1(spec, ones_weights(spec, 2), sched, 1, 0), domain_error);
  CHECK_THROWS_AS(check_thm1(spec, ones_weights(spec, 2), sched, 3, 10), domain_error);
}

TEST_CASE("thm1 balanced config agrees with the exact rational transcription") {
  ModelSpec spec;
  spec.N = 2;
  spec.m = {7, 7};
  spec.r = {12.0, 12.0};
  LossWeights w = ones_weights(spec, 2);
  ShrinkageSchedule sched = ShrinkageSchedule::eb_ml(spec, Vec(2, 1.0));
  RationalThm1 oracle(spec, 2);

  const std::int64_t horizon = 300;
  for (int variant : {1, 2}) {
    DominanceVerdict v = check_thm1(spec, w, sched, variant, horizon);
    std::vector<std::int64_t> expect;
    for (std::int64_t x = 1; x <= horizon; ++x) {
      bool ok = variant == 1 ? oracle.ok_variant1(x) : oracle.ok_variant2(x);
      if (!ok) expect.push_back(x);
    }
    CHECK(v.witnesses == expect);
  }
  // this configuration satisfies variant (i) everywhere
  DominanceVerdict v1 = check_thm1(spec, w, sched, 1, 2000);
  CHECK(v1.holds);
  CHECK(v1.tail == TailVerdict::holds_in_limit);
  CHECK(v1.witnesses.empty());
}

TEST_CASE("thm1 partial witness window matches the rational oracle") {
  // a heavy unweighted third population inflates the schedule at small x,
  // producing a failure window at moderate x while the tail still holds
  ModelSpec spec;
  spec.N = 3;
  spec.m = {7, 7, 20};
  spec.r = {2.5, 2.5, 8.0};
  LossWeights w = ones_weights(spec, 2);
  ShrinkageSchedule sched = ShrinkageSchedule::eb_ml(spec, Vec(3, 1.0));
  RationalThm1 oracle(spec, 2);

  const std::int64_t horizon = 600;
  DominanceVerdict v = check_thm1(spec, w, sched, 1, horizon);
  std::vector<std::int64_t> expect;
  for (std::int64_t x = 1; x <= horizon; ++x)
    if (!oracle.ok_variant1(x)) expect.push_back(x);
  CHECK(v.witnesses == expect);
  CHECK_FALSE(expect.empty());
  CHECK_FALSE(v.holds);
  CHECK(v.tail == TailVerdict::holds_in_limit);
}

TEST_CASE("monotonicity in the horizon: enlarging never flips false to true") {
  CounterRng rng({31, 0});
  for (int trial = 0; trial < 30; ++trial) {
    ModelSpec spec = test::random_spec(rng, 3, 6, 2.5, 12.0);
    LossWeights w = ones_weights(spec, spec.N);
    Vec atilde(std::size_t(spec.N));
    for (auto& a : atilde) a = 0.5 + 2.0 * rng.uniform();
    ShrinkageSchedule sched = ShrinkageSchedule::eb_ml(spec, atilde);
    int variant = rng.uniform() < 0.5 ? 1 : 2;
    DominanceVerdict small = check_thm1(spec, w, sched, variant, 50);
    DominanceVerdict large = check_thm1(spec, w, sched, variant, 500);
    if (!small.holds) CHECK_FALSE(large.holds);
  }
}

namespace {

// independent double-precision transcription of the scalar-weight affine
// condition, used as the randomized oracle
bool assumption2_oracle_at(const ModelSpec& spec, const LossWeights& w, const Vec& bt,
                           double ct, std::int64_t x) {
  double r_lo = 1e300, r_hi = 0.0, r_sum = 0.0, c_lo = 1e300, cc = 0.0;
  for (int nu = 0; nu < w.n; ++nu) {
    r_lo = std::min(r_lo, spec.r[std::size_t(nu)]);
    r_hi = std::max(r_hi, spec.r[std::size_t(nu)]);
    r_sum += spec.r[std::size_t(nu)];
    double rs = 0.0, rm = 0.0;
    for (double v : w.c[std::size_t(nu)]) {
      rs += v;
      rm = std::max(rm, v);
    }
    c_lo = std::min(c_lo, rs);
    cc = std::max(cc, rm);
  }
  double a1 = 0.0;
  for (int nu = 0; nu < w.n; ++nu) {
    double rm = 0.0;
    for (double v : w.c[std::size_t(nu)]) rm = std::max(rm, v);
    a1 = std::max(a1, rm * (3.0 + 4.0 * bt[std::size_t(nu)] * ct) /
                          (1.0 + 2.0 * bt[std::size_t(nu)] * ct));
  }
  double b_lo = 1e300, b_hi = 0.0;
  for (int nu = 0; nu < w.n; ++nu) {
    b_lo = std::min(b_lo, bt[std::size_t(nu)]);
    b_hi = std::max(b_hi, bt[std::size_t(nu)]);
  }
  double t = b_hi + 1.0 / (ct * (double(x) + 1.0));
  double ratio2 = (r_lo / r_hi) * (r_lo / r_hi);
  double n = double(w.n);

  auto pair_ok = [&](bool with_ratio) {
    double th = 2.0 * (with_ratio ? ratio2 : 1.0) * (c_lo - a1) * (b_lo / b_hi);
    if (with_ratio) {
      if (cc * t - th <= 0.0) return c_lo * t - th * (r_lo + t) <= 0.0;
      return double(x) * (cc * t - th) + n * c_lo * t - n * th * (r_lo + t) <= 0.0;
    }
    if (cc * t - th <= 0.0) return (c_lo - cc * r_lo) - th <= 0.0;
    return (r_sum + double(x)) * (cc * t - th) + n * (c_lo - cc * r_lo) * t -
               n * th * t <=
           0.0;
  };
  return pair_ok(true) || pair_ok(false);
}

}  // namespace

TEST_CASE("assumption 1 item failures and randomized oracle") {
  ModelSpec spec;
  spec.N = 2;
  spec.m = {2, 2};
  spec.r = {8.0, 8.0};
  LossWeights w = ones_weights(spec, 2);

  EbAffineSpec eb;
  eb.b = {0.5, 0.5};
  eb.cmat.assign(2, Ragged{{1.0, 1.0}, {1.0, 1.0}});

  // shrink r below C + 1 at one population: item (b)
  ModelSpec low = spec;
  low.r = {1.0, 8.0};
  DominanceVerdict vb = check_assumption1(low, w, eb, 50);
  CHECK_FALSE(vb.holds);
  CHECK(vb.reason.find("(b)") != std::string::npos);

  // huge per-cell weight spread: item (c)
  LossWeights heavy = w;
  heavy.c[0] = {30.0, 0.1};
  DominanceVerdict vc = check_assumption1(spec, heavy, eb, 50);
  CHECK_FALSE(vc.holds);
  CHECK(vc.reason.find("(c)") != std::string::npos);

  // scalar weights reduce assumption 1 to assumption 2; compare witness sets
  CounterRng rng({41, 0});
  for (int trial = 0; trial < 100; ++trial) {
    ModelSpec s = test::random_spec(rng, 3, 4, 1.2, 9.0);
    LossWeights lw = ones_weights(s, s.N);
    double ct = 0.05 + rng.uniform();
    Vec bt(std::size_t(s.N));
    for (auto& b : bt) b = 0.2 + 2.0 * rng.uniform();
    EbAffineSpec scalar;
    scalar.b = bt;
    scalar.cmat.assign(std::size_t(s.N), Ragged(std::size_t(s.N)));
    for (int nu = 0; nu < s.N; ++nu)
      for (int nup = 0; nup < s.N; ++nup)
        scalar.cmat[std::size_t(nu)][std::size_t(nup)].assign(
            std::size_t(s.m[std::size_t(nup)]), ct);

    DominanceVerdict v1 = check_assumption1(s, lw, scalar, 100);
    DominanceVerdict v2 = check_assumption2(s, lw, bt, ct, 100);
    // scalar weights make C = 1/(1 + 2 b c), so the two conditions coincide
    CHECK(v1.holds == v2.holds);
    CHECK(v1.witnesses == v2.witnesses);
  }
}

TEST_CASE("assumption 2 against the independent transcription") {
  CounterRng rng({42, 0});
  for (int trial = 0; trial < 200; ++trial) {
    ModelSpec s = test::random_spec(rng, 3, 4, 1.2, 9.0);
    LossWeights lw = ones_weights(s, s.N);
    // occasional non-uniform weights
    if (rng.uniform() < 0.4)
      for (auto& row : lw.c)
        for (auto& v : row) v = 0.5 + rng.uniform();
    double ct = 0.05 + rng.uniform();
    Vec bt(std::size_t(s.N));
    for (auto& b : bt) b = 0.2 + 2.0 * rng.uniform();

    DominanceVerdict v = check_assumption2(s, lw, bt, ct, 100);
    if (!v.reason.empty() && v.reason.find("item (") != std::string::npos) continue;
    std::vector<std::int64_t> expect;
    for (std::int64_t x = 1; x <= 100; ++x)
      if (!assumption2_oracle_at(s, lw, bt, ct, x)) expect.push_back(x);
    CHECK(v.witnesses == expect);
  }
}

TEST_CASE("assumption 2 limiting algebra for huge ctilde") {
  // c -> infinity turns item (b) into r >= 1 and r + b >= 2
  ModelSpec spec;
  spec.N = 1;
  spec.m = {4};
  spec.r = {1.0001};
  LossWeights w = ones_weights(spec, 1);
  DominanceVerdict v = check_assumption2(spec, w, {1.0}, 1e12, 50);
  CHECK(v.reason.find("item (b)") == std::string::npos);

  spec.r = {0.9999};
  DominanceVerdict v2 = check_assumption2(spec, w, {1.0}, 1e12, 50);
  CHECK_FALSE(v2.holds);
  CHECK(v2.reason.find("item (b)") != std::string::npos);
}

TEST_CASE("predictive-shrinkage condition: closed form vs finite scan") {
  ModelSpec spec;
  spec.N = 2;
  spec.m = {3, 3};
  spec.r = {5.0, 5.0};
  TableModel tm;
  tm.L = 2;
  tm.nu = {{0}, {0, 1}};
  tm.l = {1, 1};
  tm.build(spec);

  // r = 1 removes the left side entirely: the verdict reduces to K >= 0,
  // which the proper-posterior constraint forces negative here
  ShrinkagePriorSpec pr;
  pr.alpha = 1.0;
  pr.beta = 1.0;
  pr.gamma = {1.0, 1.0};
  pr.base.a0 = {-0.9, -0.9};
  pr.base.a = {Vec(3, 0.5), Vec(3, 0.5)};
  ModelSpec r1 = spec;
  r1.r = {1.0, 1.0};
  DominanceVerdict vr1 = check_thm_multin(r1, tm, pr);
  bool k_nonneg = true;
  for (int nu = 0; nu < 2; ++nu) {
    double g = (pr.alpha + 1.0) * pr.gamma[std::size_t(nu)] /
               (pr.beta + pr.gamma[std::size_t(nu)]);
    if (-g - double(tm.trials_touching(nu)) - pr.base.a0[std::size_t(nu)] < 0.0)
      k_nonneg = false;
  }
  CHECK(vr1.holds == k_nonneg);
  CHECK_FALSE(vr1.holds);

  // Jeffreys-type plug-in arithmetic: m = 9, total trials 2, K = 4 - 2 - 1 > 0
  ModelSpec big;
  big.N = 2;
  big.m = {9, 9};
  big.r = {5.0, 5.0};
  TableModel tmb;
  tmb.L = 2;
  tmb.nu = {{0}, {0, 1}};
  tmb.l = {1, 1};
  tmb.build(big);
  ShrinkagePriorSpec jb = pr;
  jb.base.a0 = {-4.0, -4.0};
  jb.base.a = {Vec(9, 0.5), Vec(9, 0.5)};
  CHECK(check_thm_multin(big, tmb, jb).holds);

  // preamble violations throw
  ModelSpec bad = spec;
  bad.r = {0.5, 5.0};
  ShrinkagePriorSpec proper = pr;
  proper.base.a0 = {-0.2, -0.2};
  CHECK_THROWS_AS(check_thm_multin(bad, tm, proper), domain_error);

  // closed form equals a brute-force scan of the affine condition
  CounterRng rng({51, 0});
  for (int trial = 0; trial < 100; ++trial) {
    ModelSpec s = test::random_spec(rng, 2, 4, 1.0, 5.0);
    TableModel t;
    t.L = 1;
    t.nu = {{}};
    for (int nu = 0; nu < s.N; ++nu) t.nu[0].push_back(nu);
    t.l = {1 + std::int64_t(rng.uniform() * 3)};
    t.build(s);

    ShrinkagePriorSpec q;
    q.alpha = 0.2 + 2.0 * rng.uniform();
    q.beta = 0.2 + 2.0 * rng.uniform();
    q.gamma.assign(std::size_t(s.N), 0.0);
    for (auto& g : q.gamma) g = 0.2 + 2.0 * rng.uniform();
    q.base.a.resize(std::size_t(s.N));
    q.base.a0.resize(std::size_t(s.N));
    for (int nu = 0; nu < s.N; ++nu) {
      q.base.a[std::size_t(nu)].assign(std::size_t(s.m[std::size_t(nu)]),
                                       0.3 + 1.7 * rng.uniform());
      // pin K away from zero so the scan horizon always decides
      double g = (q.alpha + 1.0) * q.gamma[std::size_t(nu)] /
                 (q.beta + q.gamma[std::size_t(nu)]);
      double k_target = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (0.05 + 3.0 * rng.uniform());
      double a0 = -g - double(t.trials_touching(nu)) - k_target;
      if (s.r[std::size_t(nu)] + a0 <= 0.0)
        a0 = -s.r[std::size_t(nu)] + 0.1;  // keep the posterior proper
      q.base.a0[std::size_t(nu)] = a0;
    }

    DominanceVerdict closed = check_thm_multin(s, t, q);
    bool scan = true;
    for (int nu = 0; nu < s.N && scan; ++nu) {
      double g = (q.alpha + 1.0) * q.gamma[std::size_t(nu)] /
                 (q.beta + q.gamma[std::size_t(nu)]);
      double c = (g - q.base.adot(nu)) * (s.r[std::size_t(nu)] - 1.0);
      double k = -g - double(t.trials_touching(nu)) - q.base.a0[std::size_t(nu)];
      for (std::int64_t x = 1; x <= 100000 && scan; ++x)
        if (c > double(x) * k) scan = false;
    }
    CHECK(closed.holds == scan);
  }
}

TEST_CASE("inadmissibility window for the flat-prior mass") {
  ModelSpec spec;
  spec.N = 2;
  spec.m = {3, 3};
  spec.r = {5.0, 5.0};
  TableModel tm;
  tm.L = 2;
  tm.nu = {{0}, {0, 1}};
  tm.l = {1, 1};
  tm.build(spec);
  // population 0 sees 2 trials but (m-1)/2 = 1, so the window is empty
  CHECK_FALSE(check_cor_multin(spec, tm));

  ModelSpec big;
  big.N = 2;
  big.m = {9, 9};
  big.r = {5.0, 5.0};
  TableModel tmb = tm;
  tmb.build(big);
  CHECK(check_cor_multin(big, tmb));

  big.r = {0.9, 5.0};
  CHECK_FALSE(check_cor_multin(big, tmb));
}

TEST_CASE("verdict serialization") {
  DominanceVerdict v;
  v.holds = false;
  v.checked_horizon = 42;
  v.tail = TailVerdict::fails_in_limit;
  v.witnesses = {3, 4};
  v.reason = "demo";
  std::string j = v.to_json();
  CHECK(j.find("\"holds\":false") != std::string::npos);
  CHECK(j.find("\"checked-horizon\":42") != std::string::npos);
  CHECK(j.find("\"tail-verdict\":\"fails-in-limit\"") != std::string::npos);
  CHECK(j.find("[3,4]") != std::string::npos);
}
