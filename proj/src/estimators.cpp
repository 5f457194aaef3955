#include "negmn/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace negmn {

void LossWeights::validate_for(const ModelSpec& spec) const {
  if (int(c.size()) != spec.N) throw domain_error("LossWeights: population count mismatch");
  if (n < 1 || n > spec.N) throw domain_error("LossWeights: n must be in 1..N");
  for (int nu = 0; nu < spec.N; ++nu) {
    if (int(c[std::size_t(nu)].size()) != spec.m[std::size_t(nu)])
      throw domain_error("LossWeights: length mismatch");
    for (double v : c[std::size_t(nu)])
      if (v < 0.0) throw domain_error("LossWeights: weights must be >= 0");
  }
}

double LossWeights::row_sum(int nu) const {
  double s = 0.0;
  for (double v : c[std::size_t(nu)]) s += v;
  return s;
}

double LossWeights::row_max(int nu) const {
  double s = 0.0;
  for (double v : c[std::size_t(nu)]) s = std::max(s, v);
  return s;
}

double LossWeights::min_row_sum() const {
  double s = std::numeric_limits<double>::infinity();
  for (int nu = 0; nu < n; ++nu) s = std::min(s, row_sum(nu));
  return s;
}

double LossWeights::max_cell() const {
  double s = 0.0;
  for (int nu = 0; nu < n; ++nu) s = std::max(s, row_max(nu));
  return s;
}

ShrinkageSchedule ShrinkageSchedule::eb_ml(const ModelSpec& spec, Vec atilde,
                                           double delta0) {
  spec.validate();
  if (int(atilde.size()) != spec.N) throw domain_error("eb_ml schedule: atilde length");
  if (!(delta0 > 0.0)) throw domain_error("eb_ml schedule: delta0 must be > 0");
  double s = 0.0;
  for (int nu = 0; nu < spec.N; ++nu) {
    if (!(atilde[std::size_t(nu)] > 0.0))
      throw domain_error("eb_ml schedule: atilde must be > 0");
    s += double(spec.m[std::size_t(nu)]) * spec.r[std::size_t(nu)] / atilde[std::size_t(nu)];
  }
  ShrinkageSchedule out;
  out.kind_ = Kind::EbMl;
  out.delta0_ = delta0;
  out.m_.resize(std::size_t(spec.N));
  out.coef_.resize(std::size_t(spec.N));
  out.limit_.resize(std::size_t(spec.N));
  for (int nu = 0; nu < spec.N; ++nu) {
    out.m_[std::size_t(nu)] = double(spec.m[std::size_t(nu)]);
    out.coef_[std::size_t(nu)] = atilde[std::size_t(nu)] * s;
    out.limit_[std::size_t(nu)] = double(spec.m[std::size_t(nu)]);
  }
  return out;
}

ShrinkageSchedule ShrinkageSchedule::eb_moment(const ModelSpec& spec, double delta0) {
  spec.validate();
  if (!(delta0 > 0.0)) throw domain_error("eb_moment schedule: delta0 must be > 0");
  ShrinkageSchedule out;
  out.kind_ = Kind::EbMoment;
  out.delta0_ = delta0;
  out.m_.resize(std::size_t(spec.N));
  out.limit_.resize(std::size_t(spec.N));
  double s = 0.0;
  for (int nu = 0; nu < spec.N; ++nu)
    s += double(spec.m[std::size_t(nu)]) * spec.r[std::size_t(nu)];
  out.moment_sum_ = s;
  for (int nu = 0; nu < spec.N; ++nu) {
    out.m_[std::size_t(nu)] = double(spec.m[std::size_t(nu)]);
    out.limit_[std::size_t(nu)] = double(spec.m[std::size_t(nu)]) + 1.0;
  }
  return out;
}

ShrinkageSchedule ShrinkageSchedule::custom(std::vector<Vec> table, Vec limit) {
  if (limit.empty()) throw domain_error("custom schedule: empty limit");
  for (const auto& row : table) {
    if (row.size() != limit.size()) throw domain_error("custom schedule: ragged table");
    for (double v : row)
      if (!(v > 0.0)) throw domain_error("custom schedule: values must be > 0");
  }
  for (double v : limit)
    if (!(v > 0.0)) throw domain_error("custom schedule: limit must be > 0");
  ShrinkageSchedule out;
  out.kind_ = Kind::Custom;
  out.table_ = std::move(table);
  out.limit_ = std::move(limit);
  return out;
}

Vec ShrinkageSchedule::eval(std::int64_t x) const {
  if (x < 0) throw domain_error("ShrinkageSchedule: x must be >= 0");
  Vec out(limit_.size());
  switch (kind_) {
    case Kind::EbMl:
      for (std::size_t nu = 0; nu < out.size(); ++nu)
        out[nu] = x == 0 ? delta0_ : m_[nu] + coef_[nu] / double(x);
      break;
    case Kind::EbMoment:
      for (std::size_t nu = 0; nu < out.size(); ++nu)
        out[nu] = x == 0 ? delta0_ : m_[nu] + 1.0 + moment_sum_ / double(x);
      break;
    case Kind::Custom:
      if (std::size_t(x) < table_.size()) return table_[std::size_t(x)];
      return limit_;
  }
  return out;
}

Vec ShrinkageSchedule::limit() const { return limit_; }

void EbAffineSpec::validate_for(const ModelSpec& spec) const {
  if (int(b.size()) != spec.N || int(cmat.size()) != spec.N)
    throw domain_error("EbAffineSpec: need one b and one weight array per population");
  for (int nu = 0; nu < spec.N; ++nu) {
    if (!(b[std::size_t(nu)] > 0.0)) throw domain_error("EbAffineSpec: b must be > 0");
    const auto& cm = cmat[std::size_t(nu)];
    if (int(cm.size()) != spec.N) throw domain_error("EbAffineSpec: weight array shape");
    for (int nup = 0; nup < spec.N; ++nup) {
      if (int(cm[std::size_t(nup)].size()) != spec.m[std::size_t(nup)])
        throw domain_error("EbAffineSpec: weight array shape");
      for (double v : cm[std::size_t(nup)])
        if (!(v > 0.0)) throw domain_error("EbAffineSpec: weights must be > 0");
    }
  }
}

namespace {
Ragged zero_like(const ModelSpec& spec) {
  Ragged out(std::size_t(spec.N));
  for (int nu = 0; nu < spec.N; ++nu)
    out[std::size_t(nu)].assign(std::size_t(spec.m[std::size_t(nu)]), 0.0);
  return out;
}
}  // namespace

Ragged umvu(const CountData& x, const ModelSpec& spec) {
  Ragged out = zero_like(spec);
  for (int nu = 0; nu < spec.N; ++nu) {
    std::int64_t row = x.row_sum(nu);
    if (row == 0) continue;  // 0/0 = 0, covers r = 1 with an empty row
    double denom = spec.r[std::size_t(nu)] + double(row) - 1.0;
    for (int i = 0; i < spec.m[std::size_t(nu)]; ++i)
      out[std::size_t(nu)][std::size_t(i)] =
          double(x.x[std::size_t(nu)][std::size_t(i)]) / denom;
  }
  return out;
}

Ragged shrinkage_estimate(const CountData& x, const ModelSpec& spec,
                          const ShrinkageSchedule& delta) {
  Ragged out = zero_like(spec);
  Vec d = delta.eval(x.total());
  for (int nu = 0; nu < spec.N; ++nu) {
    std::int64_t row = x.row_sum(nu);
    if (row == 0) continue;
    double denom = spec.r[std::size_t(nu)] + double(row) - 1.0 + d[std::size_t(nu)];
    for (int i = 0; i < spec.m[std::size_t(nu)]; ++i)
      out[std::size_t(nu)][std::size_t(i)] =
          double(x.x[std::size_t(nu)][std::size_t(i)]) / denom;
  }
  return out;
}

Ragged eb_ml(const CountData& x, const ModelSpec& spec, const Vec& atilde, double delta0) {
  return shrinkage_estimate(x, spec, ShrinkageSchedule::eb_ml(spec, atilde, delta0));
}

Ragged eb_affine(const CountData& x, const ModelSpec& spec, const EbAffineSpec& eb) {
  eb.validate_for(spec);
  Ragged out = zero_like(spec);
  for (int nu = 0; nu < spec.N; ++nu) {
    std::int64_t row = x.row_sum(nu);
    if (row == 0) continue;
    double xt = 0.0;
    for (int nup = 0; nup < spec.N; ++nup)
      for (int i = 0; i < spec.m[std::size_t(nup)]; ++i)
        xt += eb.cmat[std::size_t(nu)][std::size_t(nup)][std::size_t(i)] *
              double(x.x[std::size_t(nup)][std::size_t(i)]);
    // row > 0 implies xt > 0, so 1/xt is safe
    double denom = spec.r[std::size_t(nu)] + double(row) - 1.0 + eb.b[std::size_t(nu)] +
                   1.0 / xt;
    for (int i = 0; i < spec.m[std::size_t(nu)]; ++i)
      out[std::size_t(nu)][std::size_t(i)] =
          double(x.x[std::size_t(nu)][std::size_t(i)]) / denom;
  }
  return out;
}

RhoResult schedule_rho(const ShrinkageSchedule& delta, int n, std::int64_t x_max) {
  if (n < 1 || n > delta.populations()) throw domain_error("schedule_rho: bad n");
  if (x_max < 2) throw domain_error("schedule_rho: x_max must be >= 2");
  auto ratio = [&](const Vec& d) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int nu = 0; nu < n; ++nu) {
      lo = std::min(lo, d[std::size_t(nu)]);
      hi = std::max(hi, d[std::size_t(nu)]);
    }
    return lo / hi;
  };
  RhoResult out;
  out.rho = std::numeric_limits<double>::infinity();
  for (std::int64_t x = 2; x <= x_max; ++x) {
    double v = ratio(delta.eval(x));
    if (v < out.rho) {
      out.rho = v;
      out.argmin_x = x;
    }
  }
  double at_limit = ratio(delta.limit());
  if (at_limit < out.rho) {
    out.rho = at_limit;
    out.argmin_x = 0;
    out.attained_at_limit = true;
  }
  return out;
}

RhoResult eb_rho_detail(const Vec& atilde, const ModelSpec& spec, int n,
                        std::int64_t x_max) {
  spec.validate();
  if (n < 1 || n > spec.N) throw domain_error("eb_rho: n must be in 1..N");
  bool all_m = true, all_one = true;
  for (int nu = 0; nu < spec.N; ++nu) {
    if (atilde[std::size_t(nu)] != double(spec.m[std::size_t(nu)])) all_m = false;
    if (atilde[std::size_t(nu)] != 1.0) all_one = false;
  }
  if (all_m || all_one) {
    // ratio is monotone with infimum min m / max m over the weighted block
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int nu = 0; nu < n; ++nu) {
      lo = std::min(lo, double(spec.m[std::size_t(nu)]));
      hi = std::max(hi, double(spec.m[std::size_t(nu)]));
    }
    RhoResult out;
    out.rho = lo / hi;
    out.attained_at_limit = !all_m;  // for atilde = m the ratio is constant in x
    out.argmin_x = all_m ? 2 : 0;
    return out;
  }
  return schedule_rho(ShrinkageSchedule::eb_ml(spec, atilde), n, x_max);
}

double eb_rho(const Vec& atilde, const ModelSpec& spec, int n, std::int64_t x_max) {
  return eb_rho_detail(atilde, spec, n, x_max).rho;
}

double loss_std_sq(const Ragged& d, const ProbParam& p, const LossWeights& w) {
  double acc = 0.0;
  for (int nu = 0; nu < w.n; ++nu) {
    for (std::size_t i = 0; i < w.c[std::size_t(nu)].size(); ++i) {
      double diff = d[std::size_t(nu)][i] - p.p[std::size_t(nu)][i];
      acc += w.c[std::size_t(nu)][i] * diff * diff / p.p[std::size_t(nu)][i];
    }
  }
  return acc;
}

}  // namespace negmn
