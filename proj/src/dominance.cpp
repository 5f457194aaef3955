#include "negmn/dominance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace negmn {

namespace {

constexpr double kBoundaryTol = 1e-12;

const char* tail_name(TailVerdict t) {
  switch (t) {
    case TailVerdict::holds_in_limit: return "holds-in-limit";
    case TailVerdict::fails_in_limit: return "fails-in-limit";
    default: return "inconclusive";
  }
}

DominanceVerdict preamble_failure(std::string reason) {
  DominanceVerdict v;
  v.holds = false;
  v.tail = TailVerdict::inconclusive;
  v.reason = std::move(reason);
  return v;
}

struct ThmScope {
  double r_lo = 0.0, r_hi = 0.0;   // min/max shape over the weighted block
  double r_sum = 0.0;              // sum of shapes over the block
  double c_lo = 0.0;               // min row sum
  double cc = 0.0;                 // max cell weight
};

ThmScope scope_of(const ModelSpec& spec, const LossWeights& w) {
  ThmScope s;
  s.r_lo = std::numeric_limits<double>::infinity();
  s.c_lo = std::numeric_limits<double>::infinity();
  for (int nu = 0; nu < w.n; ++nu) {
    s.r_lo = std::min(s.r_lo, spec.r[std::size_t(nu)]);
    s.r_hi = std::max(s.r_hi, spec.r[std::size_t(nu)]);
    s.r_sum += spec.r[std::size_t(nu)];
  }
  s.c_lo = w.min_row_sum();
  s.cc = w.max_cell();
  return s;
}

}  // namespace

std::string DominanceVerdict::to_json() const {
  std::ostringstream os;
  os << "{\"holds\":" << (holds ? "true" : "false")
     << ",\"checked-horizon\":" << checked_horizon << ",\"tail-verdict\":\""
     << tail_name(tail) << "\",\"witnesses\":[";
  for (std::size_t i = 0; i < witnesses.size(); ++i) {
    if (i) os << ',';
    os << witnesses[i];
  }
  os << "]";
  if (!reason.empty()) os << ",\"reason\":\"" << reason << "\"";
  os << "}";
  return os.str();
}

DominanceVerdict check_thm1(const ModelSpec& spec, const LossWeights& w,
                            const ShrinkageSchedule& delta, int variant,
                            std::int64_t x_max) {
  spec.validate();
  w.validate_for(spec);
  if (x_max < 1) throw domain_error("check_thm1: x_max must be >= 1");
  if (variant != 1 && variant != 2) throw domain_error("check_thm1: variant must be 1 or 2");

  ThmScope sc = scope_of(spec, w);
  if (!(sc.cc > 0.0)) return preamble_failure("max cell weight must be strictly positive");
  if (!(3.0 * sc.cc <= sc.c_lo))
    return preamble_failure("weight balance 3*max-cell <= min-row-sum fails");
  for (int nu = 0; nu < w.n; ++nu)
    if (w.row_sum(nu) > 0.0 && spec.r[std::size_t(nu)] < 2.5)
      return preamble_failure("shape r < 5/2 at weighted population " + std::to_string(nu));

  // monotonicity of x delta(x) on the horizon, weighted populations only
  for (std::int64_t x = 1; x < x_max; ++x) {
    Vec d0 = delta.eval(x), d1 = delta.eval(x + 1);
    for (int nu = 0; nu < w.n; ++nu) {
      if (w.row_sum(nu) <= 0.0) continue;
      if (double(x) * d0[std::size_t(nu)] >
          double(x + 1) * d1[std::size_t(nu)] + kBoundaryTol)
        return preamble_failure("x*delta(x) monotonicity fails at x = " + std::to_string(x));
    }
  }

  double rho = schedule_rho(delta, w.n, std::max<std::int64_t>(x_max, 1000)).rho;
  double ratio2 = (sc.r_lo / sc.r_hi) * (sc.r_lo / sc.r_hi);
  double gap = sc.c_lo - 3.0 * sc.cc;
  double q1 = 2.0 * ratio2 * gap * rho;  // variant 1 threshold
  double q2 = 2.0 * gap * rho;           // variant 2 threshold

  auto delta_bar = [&](std::int64_t xp1) {
    Vec d = delta.eval(xp1);
    double hi = 0.0;
    for (int nu = 0; nu < w.n; ++nu) hi = std::max(hi, d[std::size_t(nu)]);
    return hi;
  };

  auto ok_at = [&](std::int64_t x, double dbar) {
    if (variant == 1) {
      double base = (q1 - sc.c_lo) * dbar + sc.r_lo * q1;
      if (sc.cc * dbar <= q1) return base >= 0.0;
      return double(w.n) * base >= double(x) * (sc.cc * dbar - q1);
    }
    if (sc.cc * dbar <= q2) return q2 - (sc.c_lo - sc.r_lo * sc.cc) >= 0.0;
    return double(w.n) * (q2 - (sc.c_lo - sc.r_lo * sc.cc)) * dbar >=
           (sc.r_sum + double(x)) * (sc.cc * dbar - q2);
  };

  DominanceVerdict v;
  v.checked_horizon = x_max;
  for (std::int64_t x = 1; x <= x_max; ++x)
    if (!ok_at(x, delta_bar(x + 1))) v.witnesses.push_back(x);

  // tail: substitute the schedule limit for delta_bar(x+1)
  Vec lim = delta.limit();
  double dbar_inf = 0.0;
  for (int nu = 0; nu < w.n; ++nu) dbar_inf = std::max(dbar_inf, lim[std::size_t(nu)]);
  double q = variant == 1 ? q1 : q2;
  double excess = sc.cc * dbar_inf - q;
  if (excess <= kBoundaryTol && excess >= -kBoundaryTol) {
    v.tail = TailVerdict::inconclusive;
  } else if (excess < 0.0) {
    bool const_branch = variant == 1
                            ? (q1 - sc.c_lo) * dbar_inf + sc.r_lo * q1 >= 0.0
                            : q2 - (sc.c_lo - sc.r_lo * sc.cc) >= 0.0;
    v.tail = const_branch ? TailVerdict::holds_in_limit : TailVerdict::fails_in_limit;
  } else {
    // excess > 0: the x-proportional side grows without bound
    v.tail = TailVerdict::fails_in_limit;
  }

  v.holds = v.witnesses.empty() && v.tail == TailVerdict::holds_in_limit;
  if (!v.holds && v.reason.empty())
    v.reason = !v.witnesses.empty() ? "condition fails on the horizon"
                                    : std::string("tail verdict: ") + tail_name(v.tail);
  return v;
}

namespace {

// shared scaffolding for the two affine-shrinkage checkers; the branch pair is
// parameterized by T(x), the prefactor on the shrinkage mass ratio, and the
// constant subtracted in item (c)
struct AffineTerms {
  std::function<double(double)> big_t;  // T(x); x = +inf gives the limit
  double f_ratio = 0.0;                 // product of lower/upper schedule bounds
  double a_const = 0.0;                 // A or A1
};

DominanceVerdict check_affine_common(const ModelSpec& spec, const LossWeights& w,
                                     const AffineTerms& terms, std::int64_t x_max,
                                     DominanceVerdict preamble) {
  if (!preamble.reason.empty()) return preamble;
  ThmScope sc = scope_of(spec, w);
  double ratio2 = (sc.r_lo / sc.r_hi) * (sc.r_lo / sc.r_hi);
  double margin = sc.c_lo - terms.a_const;

  auto pair_ok = [&](std::int64_t x, double t, bool with_ratio) {
    double scale = with_ratio ? ratio2 : 1.0;
    double thresh = 2.0 * scale * margin * terms.f_ratio;
    if (with_ratio) {
      if (sc.cc * t - thresh <= 0.0)
        return sc.c_lo * t - thresh * (sc.r_lo + t) <= 0.0;
      return double(x) * (sc.cc * t - thresh) + double(w.n) * sc.c_lo * t -
                 double(w.n) * thresh * (sc.r_lo + t) <=
             0.0;
    }
    if (sc.cc * t - thresh <= 0.0)
      return (sc.c_lo - sc.cc * sc.r_lo) - thresh <= 0.0;
    return (sc.r_sum + double(x)) * (sc.cc * t - thresh) +
               double(w.n) * (sc.c_lo - sc.cc * sc.r_lo) * t -
               double(w.n) * thresh * t <=
           0.0;
  };

  DominanceVerdict v;
  v.checked_horizon = x_max;
  for (std::int64_t x = 1; x <= x_max; ++x) {
    double t = terms.big_t(double(x));
    if (!pair_ok(x, t, true) && !pair_ok(x, t, false)) v.witnesses.push_back(x);
  }

  double t_inf = terms.big_t(std::numeric_limits<double>::infinity());
  auto tail_of = [&](bool with_ratio) {
    double scale = with_ratio ? ratio2 : 1.0;
    double thresh = 2.0 * scale * margin * terms.f_ratio;
    double excess = sc.cc * t_inf - thresh;
    if (std::abs(excess) <= kBoundaryTol) return TailVerdict::inconclusive;
    if (excess < 0.0) {
      bool ok = with_ratio ? sc.c_lo * t_inf - thresh * (sc.r_lo + t_inf) <= 0.0
                           : (sc.c_lo - sc.cc * sc.r_lo) - thresh <= 0.0;
      return ok ? TailVerdict::holds_in_limit : TailVerdict::fails_in_limit;
    }
    return TailVerdict::fails_in_limit;
  };
  TailVerdict t1 = tail_of(true), t2 = tail_of(false);
  if (t1 == TailVerdict::holds_in_limit || t2 == TailVerdict::holds_in_limit)
    v.tail = TailVerdict::holds_in_limit;
  else if (t1 == TailVerdict::inconclusive || t2 == TailVerdict::inconclusive)
    v.tail = TailVerdict::inconclusive;
  else
    v.tail = TailVerdict::fails_in_limit;

  v.holds = v.witnesses.empty() && v.tail == TailVerdict::holds_in_limit;
  if (!v.holds && v.reason.empty())
    v.reason = !v.witnesses.empty() ? "branch pair fails on the horizon"
                                    : std::string("tail verdict: ") + tail_name(v.tail);
  return v;
}

}  // namespace

DominanceVerdict check_assumption1(const ModelSpec& spec, const LossWeights& w,
                                   const EbAffineSpec& eb, std::int64_t x_max) {
  spec.validate();
  w.validate_for(spec);
  eb.validate_for(spec);
  if (x_max < 1) throw domain_error("check_assumption1: x_max must be >= 1");

  ThmScope sc = scope_of(spec, w);
  if (!(sc.cc > 0.0))
    return check_affine_common(spec, w, {}, x_max,
                               preamble_failure("max cell weight must be > 0"));

  // own-population weight extremes and the derived constants
  int N = spec.N;
  Vec own_lo(std::size_t(N), 0.0), own_hi(std::size_t(N), 0.0), big_c(std::size_t(N), 0.0);
  for (int nu = 0; nu < N; ++nu) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double v : eb.cmat[std::size_t(nu)][std::size_t(nu)]) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    own_lo[std::size_t(nu)] = lo;
    own_hi[std::size_t(nu)] = hi;
    big_c[std::size_t(nu)] = (hi / lo) / (1.0 + eb.b[std::size_t(nu)] * (lo + hi));
  }
  double a_const = 0.0;
  for (int nu = 0; nu < w.n; ++nu)
    a_const = std::max(a_const, w.row_max(nu) * (big_c[std::size_t(nu)] + 2.0));

  for (int nu = 0; nu < w.n; ++nu) {
    if (w.row_sum(nu) <= 0.0) continue;
    if (spec.r[std::size_t(nu)] < big_c[std::size_t(nu)] + 1.0)
      return check_affine_common(
          spec, w, {}, x_max,
          preamble_failure("item (b): r < C + 1 at population " + std::to_string(nu)));
    if (spec.r[std::size_t(nu)] + eb.b[std::size_t(nu)] < big_c[std::size_t(nu)] + 2.0)
      return check_affine_common(
          spec, w, {}, x_max,
          preamble_failure("item (b): r + b < C + 2 at population " + std::to_string(nu)));
  }
  if (sc.c_lo - a_const < 0.0)
    return check_affine_common(spec, w, {}, x_max,
                               preamble_failure("item (c): min row sum below A"));

  double b_lo = std::numeric_limits<double>::infinity(), b_hi = 0.0;
  double ownhi_lo = std::numeric_limits<double>::infinity(), ownhi_hi = 0.0;
  for (int nu = 0; nu < w.n; ++nu) {
    b_lo = std::min(b_lo, eb.b[std::size_t(nu)]);
    b_hi = std::max(b_hi, eb.b[std::size_t(nu)]);
    ownhi_lo = std::min(ownhi_lo, own_hi[std::size_t(nu)]);
    ownhi_hi = std::max(ownhi_hi, own_hi[std::size_t(nu)]);
  }
  double c_star_lo = std::numeric_limits<double>::infinity(), c_star_hi = 0.0;
  for (int nu = 0; nu < N; ++nu)
    for (int nup = 0; nup < N; ++nup)
      for (double v : eb.cmat[std::size_t(nu)][std::size_t(nup)]) {
        c_star_lo = std::min(c_star_lo, v);
        c_star_hi = std::max(c_star_hi, v);
      }

  AffineTerms terms;
  terms.a_const = a_const;
  terms.f_ratio = b_lo * c_star_lo * ownhi_lo / (b_hi * c_star_hi * ownhi_hi);
  terms.big_t = [b_hi, c_star_lo, ownhi_lo](double x) {
    if (std::isinf(x)) return b_hi;
    return b_hi + 1.0 / (c_star_lo * x + ownhi_lo);
  };
  DominanceVerdict ok;
  return check_affine_common(spec, w, terms, x_max, ok);
}

DominanceVerdict check_assumption2(const ModelSpec& spec, const LossWeights& w,
                                   const Vec& btilde, double ctilde,
                                   std::int64_t x_max) {
  spec.validate();
  w.validate_for(spec);
  if (x_max < 1) throw domain_error("check_assumption2: x_max must be >= 1");
  if (!(ctilde > 0.0)) throw domain_error("check_assumption2: ctilde must be > 0");
  if (int(btilde.size()) != spec.N)
    throw domain_error("check_assumption2: btilde length mismatch");
  for (double b : btilde)
    if (!(b > 0.0)) throw domain_error("check_assumption2: btilde must be > 0");

  ThmScope sc = scope_of(spec, w);
  if (!(sc.cc > 0.0))
    return check_affine_common(spec, w, {}, x_max,
                               preamble_failure("max cell weight must be > 0"));

  double a1 = 0.0;
  for (int nu = 0; nu < w.n; ++nu) {
    double bt = btilde[std::size_t(nu)];
    a1 = std::max(a1, w.row_max(nu) * (3.0 + 4.0 * bt * ctilde) / (1.0 + 2.0 * bt * ctilde));
  }
  for (int nu = 0; nu < w.n; ++nu) {
    if (w.row_sum(nu) <= 0.0) continue;
    double bt = btilde[std::size_t(nu)];
    double bound = 1.0 / (1.0 + 2.0 * bt * ctilde);
    if (spec.r[std::size_t(nu)] < bound + 1.0)
      return check_affine_common(
          spec, w, {}, x_max,
          preamble_failure("item (b): r below bound at population " + std::to_string(nu)));
    if (spec.r[std::size_t(nu)] + bt < bound + 2.0)
      return check_affine_common(
          spec, w, {}, x_max,
          preamble_failure("item (b): r + b below bound at population " + std::to_string(nu)));
  }
  if (sc.c_lo - a1 < 0.0)
    return check_affine_common(spec, w, {}, x_max,
                               preamble_failure("item (c): min row sum below A1"));

  double b_lo = std::numeric_limits<double>::infinity(), b_hi = 0.0;
  for (int nu = 0; nu < w.n; ++nu) {
    b_lo = std::min(b_lo, btilde[std::size_t(nu)]);
    b_hi = std::max(b_hi, btilde[std::size_t(nu)]);
  }
  AffineTerms terms;
  terms.a_const = a1;
  terms.f_ratio = b_lo / b_hi;
  terms.big_t = [b_hi, ctilde](double x) {
    if (std::isinf(x)) return b_hi;
    return b_hi + 1.0 / (ctilde * (x + 1.0));
  };
  DominanceVerdict ok;
  return check_affine_common(spec, w, terms, x_max, ok);
}

DominanceVerdict check_thm_multin(const ModelSpec& spec, const TableModel& tm,
                                  const ShrinkagePriorSpec& prior) {
  spec.validate();
  prior.validate_for(spec);
  for (int nu = 0; nu < spec.N; ++nu) {
    if (!(spec.r[std::size_t(nu)] + prior.base.a0[std::size_t(nu)] > 0.0))
      throw domain_error("check_thm_multin: r + a0 <= 0 at population " +
                         std::to_string(nu));
    if (spec.r[std::size_t(nu)] < 1.0)
      throw domain_error("check_thm_multin: r < 1 at population " + std::to_string(nu));
  }

  // condition: C_nu <= x K_nu for all x >= 1; affine in x, so it holds iff
  // K_nu >= 0 and C_nu <= K_nu
  DominanceVerdict v;
  v.checked_horizon = 0;
  v.tail = TailVerdict::holds_in_limit;
  v.holds = true;
  for (int nu = 0; nu < spec.N; ++nu) {
    double g = (prior.alpha + 1.0) * prior.gamma[std::size_t(nu)] /
               (prior.beta + prior.gamma[std::size_t(nu)]);
    double c = (g - prior.base.adot(nu)) * (spec.r[std::size_t(nu)] - 1.0);
    double k = -g - double(tm.trials_touching(nu)) - prior.base.a0[std::size_t(nu)];
    if (k < 0.0 || c > k) {
      v.holds = false;
      v.tail = k < 0.0 ? TailVerdict::fails_in_limit : TailVerdict::holds_in_limit;
      v.witnesses.push_back(k < 0.0 ? -1 : 1);  // -1 flags the unbounded tail
      v.reason = "condition fails at population " + std::to_string(nu);
      break;
    }
  }
  return v;
}

bool check_cor_multin(const ModelSpec& spec, const TableModel& tm) {
  spec.validate();
  for (int nu = 0; nu < spec.N; ++nu) {
    double half = (double(spec.m[std::size_t(nu)]) - 1.0) / 2.0;
    if (!(1.0 <= spec.r[std::size_t(nu)])) return false;
    if (!(spec.r[std::size_t(nu)] > half)) return false;
    if (!(half > double(tm.trials_touching(nu)))) return false;
  }
  return true;
}

}  // namespace negmn
