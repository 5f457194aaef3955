#include "negmn/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace negmn {

void ModelSpec::validate() const {
  if (N < 1) throw domain_error("ModelSpec: N must be >= 1");
  if (int(m.size()) != N || int(r.size()) != N)
    throw domain_error("ModelSpec: m and r must have length N");
  for (int nu = 0; nu < N; ++nu) {
    if (m[std::size_t(nu)] < 1) throw domain_error("ModelSpec: m must be >= 1");
    if (!(r[std::size_t(nu)] > 0.0)) throw domain_error("ModelSpec: r must be > 0");
  }
}

ProbParam ProbParam::from(Ragged components) {
  ProbParam out;
  out.p = std::move(components);
  out.p0.resize(out.p.size());
  for (std::size_t nu = 0; nu < out.p.size(); ++nu) {
    double s = 0.0;
    for (double v : out.p[nu]) {
      if (!(v > 0.0)) throw domain_error("ProbParam: every component must be > 0");
      s += v;
    }
    if (!(s < 1.0)) throw domain_error("ProbParam: components must sum below 1");
    out.p0[nu] = 1.0 - s;
  }
  return out;
}

void ProbParam::validate_for(const ModelSpec& spec) const {
  if (int(p.size()) != spec.N) throw domain_error("ProbParam: population count mismatch");
  for (int nu = 0; nu < spec.N; ++nu)
    if (int(p[std::size_t(nu)].size()) != spec.m[std::size_t(nu)])
      throw domain_error("ProbParam: length mismatch at population " + std::to_string(nu));
}

std::int64_t CountData::row_sum(int nu) const {
  const auto& row = x[std::size_t(nu)];
  return std::accumulate(row.begin(), row.end(), std::int64_t(0));
}

std::int64_t CountData::total() const {
  std::int64_t t = 0;
  for (int nu = 0; nu < int(x.size()); ++nu) t += row_sum(nu);
  return t;
}

void CountData::validate_for(const ModelSpec& spec) const {
  if (int(x.size()) != spec.N) throw domain_error("CountData: population count mismatch");
  for (int nu = 0; nu < spec.N; ++nu) {
    if (int(x[std::size_t(nu)].size()) != spec.m[std::size_t(nu)])
      throw domain_error("CountData: length mismatch at population " + std::to_string(nu));
    for (auto v : x[std::size_t(nu)])
      if (v < 0) throw domain_error("CountData: negative count");
  }
}

void TableModel::build(const ModelSpec& spec) {
  if (L < 1) throw domain_error("TableModel: L must be >= 1");
  if (int(nu.size()) != L || int(l.size()) != L)
    throw domain_error("TableModel: nu and l must have length L");
  dims.assign(std::size_t(L), {});
  strides.assign(std::size_t(L), {});
  cell_count.assign(std::size_t(L), 0);
  tables_of.assign(std::size_t(spec.N), {});
  for (int lam = 0; lam < L; ++lam) {
    const auto& idx = nu[std::size_t(lam)];
    if (idx.empty()) throw domain_error("TableModel: empty population list");
    if (l[std::size_t(lam)] < 1) throw domain_error("TableModel: l must be >= 1");
    int prev = -1;
    for (int h = 0; h < int(idx.size()); ++h) {
      int v = idx[std::size_t(h)];
      if (v <= prev || v < 0 || v >= spec.N)
        throw domain_error("TableModel: population lists must be strictly increasing in [0,N)");
      prev = v;
      tables_of[std::size_t(v)].push_back({lam, h});
    }
    int d = int(idx.size());
    auto& dm = dims[std::size_t(lam)];
    dm.resize(std::size_t(d));
    for (int h = 0; h < d; ++h) dm[std::size_t(h)] = spec.m[std::size_t(idx[std::size_t(h)])] + 1;
    auto& st = strides[std::size_t(lam)];
    st.assign(std::size_t(d), 1);
    for (int h = d - 2; h >= 0; --h)
      st[std::size_t(h)] = st[std::size_t(h + 1)] * std::size_t(dm[std::size_t(h + 1)]);
    cell_count[std::size_t(lam)] = st[0] * std::size_t(dm[0]);
  }
}

std::size_t TableModel::cell_index(int lambda, std::span<const int> idx) const {
  std::size_t flat = 0;
  const auto& st = strides[std::size_t(lambda)];
  for (std::size_t h = 0; h < idx.size(); ++h) flat += st[h] * std::size_t(idx[h]);
  return flat;
}

void TableModel::decode_cell(int lambda, std::size_t flat, std::span<int> idx) const {
  const auto& st = strides[std::size_t(lambda)];
  for (std::size_t h = 0; h < st.size(); ++h) {
    idx[h] = int(flat / st[h]);
    flat %= st[h];
  }
}

std::int64_t TableModel::trials_touching(int v) const {
  std::int64_t t = 0;
  for (auto [lam, h] : tables_of[std::size_t(v)]) {
    (void)h;
    t += l[std::size_t(lam)];
  }
  return t;
}

void TableCounts::validate_for(const TableModel& tm) const {
  if (w.size() != std::size_t(tm.L)) throw domain_error("TableCounts: table count mismatch");
  for (int lam = 0; lam < tm.L; ++lam) {
    const auto& arr = w[std::size_t(lam)];
    if (arr.size() != tm.cell_count[std::size_t(lam)])
      throw domain_error("TableCounts: cell count mismatch");
    std::int64_t s = 0;
    for (auto v : arr) {
      if (v < 0) throw domain_error("TableCounts: negative cell");
      s += v;
    }
    if (s != tm.l[std::size_t(lam)])
      throw domain_error("TableCounts: cells must sum to the trial count");
  }
}

double negmn_log_pmf(const Counts& x, double r, const Vec& p) {
  if (!(r > 0.0)) throw domain_error("negmn_log_pmf: r must be > 0");
  if (x.size() != p.size()) throw domain_error("negmn_log_pmf: length mismatch");
  double pdot = 0.0;
  for (double v : p) {
    if (!(v > 0.0)) throw domain_error("negmn_log_pmf: p components must be > 0");
    pdot += v;
  }
  if (!(pdot < 1.0)) throw domain_error("negmn_log_pmf: p must sum below 1");
  double p0 = 1.0 - pdot;
  std::int64_t xs = 0;
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < 0) throw domain_error("negmn_log_pmf: negative count");
    xs += x[i];
    acc += double(x[i]) * std::log(p[i]) - log_factorial(x[i]);
  }
  return log_gamma(r + double(xs)) - log_gamma(r) + r * std::log(p0) + acc;
}

double negmn_joint_log_pmf(const CountData& x, const ModelSpec& spec, const ProbParam& p) {
  double acc = 0.0;
  for (int nu = 0; nu < spec.N; ++nu)
    acc += negmn_log_pmf(x.x[std::size_t(nu)], spec.r[std::size_t(nu)], p.p[std::size_t(nu)]);
  return acc;
}

Counts negmn_sample(CounterRng& rng, double r, const Vec& p) {
  double pdot = 0.0;
  for (double v : p) pdot += v;
  double p0 = 1.0 - pdot;
  if (!(p0 > 0.0)) throw domain_error("negmn_sample: p must sum below 1");
  std::int64_t k = negbin_draw(rng, r, p0);
  Counts x(p.size(), 0);
  for (std::int64_t j = 0; j < k; ++j) ++x[std::size_t(categorical(rng, p))];
  return x;
}

CountData negmn_sample_all(CounterRng& rng, const ModelSpec& spec, const ProbParam& p) {
  CountData out;
  out.x.resize(std::size_t(spec.N));
  for (int nu = 0; nu < spec.N; ++nu)
    out.x[std::size_t(nu)] = negmn_sample(rng, spec.r[std::size_t(nu)], p.p[std::size_t(nu)]);
  return out;
}

std::pair<std::int64_t, double> negmn_trunc_radius(double r, double pdot, double eps) {
  if (!(pdot > 0.0) || !(pdot < 1.0)) throw domain_error("negmn_trunc_radius: pdot in (0,1)");
  double p0 = 1.0 - pdot;
  // follow the pmf of the total via the ratio recurrence; bound the tail by a
  // geometric series once the ratio is below 1
  double log_pmf = r * std::log(p0);
  std::int64_t k = 0;
  for (;;) {
    double log_next = log_pmf + std::log(pdot * (r + double(k)) / (double(k) + 1.0));
    double q = pdot * std::max(1.0, (r + double(k) + 1.0) / (double(k) + 2.0));
    if (q < 1.0) {
      double bound = std::exp(log_next) / (1.0 - q);
      if (bound <= eps) return {k, bound};
    }
    log_pmf = log_next;
    ++k;
    if (k > 100000000)
      throw resource_error("negmn_trunc_radius: radius exceeds enumeration budget");
  }
}

namespace {
void enumerate_rec(int pos, int m, std::int64_t remaining, Counts& cur,
                   std::vector<Counts>& out, bool exact) {
  if (pos == m - 1) {
    if (exact) {
      cur[std::size_t(pos)] = remaining;
      out.push_back(cur);
    } else {
      for (std::int64_t v = 0; v <= remaining; ++v) {
        cur[std::size_t(pos)] = v;
        out.push_back(cur);
      }
    }
    return;
  }
  for (std::int64_t v = 0; v <= remaining; ++v) {
    cur[std::size_t(pos)] = v;
    enumerate_rec(pos + 1, m, remaining - v, cur, out, exact);
  }
}
}  // namespace

std::vector<Counts> enumerate_ball(int m, std::int64_t max_total) {
  std::vector<Counts> out;
  Counts cur(std::size_t(m), 0);
  enumerate_rec(0, m, max_total, cur, out, false);
  return out;
}

std::vector<Counts> enumerate_simplex_shell(int m, std::int64_t total) {
  std::vector<Counts> out;
  Counts cur(std::size_t(m), 0);
  enumerate_rec(0, m, total, cur, out, true);
  return out;
}

std::int64_t table_s(const TableCounts& w, const TableModel& tm, int i, int v) {
  if (v < 0 || v >= int(tm.tables_of.size())) throw domain_error("table_s: population out of range");
  std::int64_t s = 0;
  std::vector<int> idx;
  for (auto [lam, h] : tm.tables_of[std::size_t(v)]) {
    if (i < 0 || i >= tm.dims[std::size_t(lam)][std::size_t(h)])
      throw domain_error("table_s: cell index out of range");
    const auto& arr = w.w[std::size_t(lam)];
    idx.assign(std::size_t(tm.dim(lam)), 0);
    for (std::size_t flat = 0; flat < arr.size(); ++flat) {
      tm.decode_cell(lam, flat, idx);
      if (idx[std::size_t(h)] == i) s += arr[flat];
    }
  }
  return s;
}

TableSuffStats table_suff_stats(const TableCounts& w, const TableModel& tm,
                                const ModelSpec& spec) {
  TableSuffStats st;
  st.s.resize(std::size_t(spec.N));
  for (int v = 0; v < spec.N; ++v)
    st.s[std::size_t(v)].assign(std::size_t(spec.m[std::size_t(v)]) + 1, 0.0);
  std::vector<int> idx;
  for (int lam = 0; lam < tm.L; ++lam) {
    const auto& arr = w.w[std::size_t(lam)];
    st.log_coef += log_factorial(tm.l[std::size_t(lam)]);
    idx.assign(std::size_t(tm.dim(lam)), 0);
    for (std::size_t flat = 0; flat < arr.size(); ++flat) {
      if (arr[flat] == 0) continue;
      st.log_coef -= log_factorial(arr[flat]);
      tm.decode_cell(lam, flat, idx);
      for (int h = 0; h < tm.dim(lam); ++h) {
        int v = tm.nu[std::size_t(lam)][std::size_t(h)];
        st.s[std::size_t(v)][std::size_t(idx[std::size_t(h)])] += double(arr[flat]);
      }
    }
  }
  // cells with zero counts still contribute -log(0!) = 0
  return st;
}

double table_log_pmf_from_stats(const TableSuffStats& st, const ProbParam& p) {
  double acc = st.log_coef;
  for (std::size_t v = 0; v < st.s.size(); ++v) {
    const auto& srow = st.s[v];
    if (srow[0] != 0.0) acc += srow[0] * std::log(p.p0[v]);
    for (std::size_t i = 1; i < srow.size(); ++i)
      if (srow[i] != 0.0) acc += srow[i] * std::log(p.p[v][i - 1]);
  }
  return acc;
}

double table_log_pmf(const TableCounts& w, const TableModel& tm, const ModelSpec& spec,
                     const ProbParam& p) {
  w.validate_for(tm);
  p.validate_for(spec);
  return table_log_pmf_from_stats(table_suff_stats(w, tm, spec), p);
}

TableCounts table_sample(CounterRng& rng, const TableModel& tm, const ModelSpec& spec,
                         const ProbParam& p) {
  p.validate_for(spec);
  TableCounts out;
  out.w.resize(std::size_t(tm.L));
  std::vector<double> cellp;
  std::vector<int> idx;
  for (int lam = 0; lam < tm.L; ++lam) {
    out.w[std::size_t(lam)].assign(tm.cell_count[std::size_t(lam)], 0);
    idx.assign(std::size_t(tm.dim(lam)), 0);
    for (std::int64_t trial = 0; trial < tm.l[std::size_t(lam)]; ++trial) {
      for (int h = 0; h < tm.dim(lam); ++h) {
        int v = tm.nu[std::size_t(lam)][std::size_t(h)];
        cellp.assign(1, p.p0[std::size_t(v)]);
        cellp.insert(cellp.end(), p.p[std::size_t(v)].begin(), p.p[std::size_t(v)].end());
        idx[std::size_t(h)] = categorical(rng, cellp);
      }
      ++out.w[std::size_t(lam)][tm.cell_index(lam, idx)];
    }
  }
  return out;
}

namespace {
void enumerate_tables_rec(const TableModel& tm, int lam, TableCounts& cur,
                          std::vector<TableCounts>& out) {
  if (lam == tm.L) {
    out.push_back(cur);
    return;
  }
  auto shells = enumerate_simplex_shell(int(tm.cell_count[std::size_t(lam)]),
                                        tm.l[std::size_t(lam)]);
  for (auto& shell : shells) {
    cur.w[std::size_t(lam)] = shell;
    enumerate_tables_rec(tm, lam + 1, cur, out);
  }
}
}  // namespace

std::vector<TableCounts> enumerate_tables(const TableModel& tm) {
  // support size blows up quickly; keep a sanity cap
  double est = 1.0;
  for (int lam = 0; lam < tm.L; ++lam) {
    double cells = double(tm.cell_count[std::size_t(lam)]);
    double trials = double(tm.l[std::size_t(lam)]);
    for (std::int64_t j = 0; j < tm.l[std::size_t(lam)]; ++j)
      est *= (cells + double(j)) / (double(j) + 1.0);
    (void)trials;
  }
  if (est > 5e6) throw resource_error("enumerate_tables: support too large to enumerate");
  TableCounts cur;
  cur.w.resize(std::size_t(tm.L));
  std::vector<TableCounts> out;
  enumerate_tables_rec(tm, 0, cur, out);
  return out;
}

std::pair<double, double> hudson_lhs_rhs(
    const std::function<double(const RaggedCounts&)>& phi, const ModelSpec& spec,
    const ProbParam& p, int i, int nu, double trunc) {
  spec.validate();
  p.validate_for(spec);
  if (nu < 0 || nu >= spec.N) throw domain_error("hudson_lhs_rhs: population out of range");
  if (i < 0 || i >= spec.m[std::size_t(nu)])
    throw domain_error("hudson_lhs_rhs: cell index out of range");

  // per-population truncation; lattice carries mass >= 1 - trunc overall
  std::vector<std::vector<Counts>> lattice(std::size_t(spec.N));
  std::vector<std::vector<double>> pmf(std::size_t(spec.N));
  double budget = 1.0;
  for (int v = 0; v < spec.N; ++v) {
    auto [radius, bound] =
        negmn_trunc_radius(spec.r[std::size_t(v)], p.pdot(v), trunc / double(spec.N));
    (void)bound;
    lattice[std::size_t(v)] = enumerate_ball(spec.m[std::size_t(v)], radius);
    budget *= double(lattice[std::size_t(v)].size());
    if (budget > 2.5e8) throw resource_error("hudson_lhs_rhs: truncated lattice too large");
    pmf[std::size_t(v)].resize(lattice[std::size_t(v)].size());
    for (std::size_t j = 0; j < lattice[std::size_t(v)].size(); ++j)
      pmf[std::size_t(v)][j] = std::exp(negmn_log_pmf(
          lattice[std::size_t(v)][j], spec.r[std::size_t(v)], p.p[std::size_t(v)]));
  }

  RaggedCounts x(std::size_t(spec.N));
  double lhs = 0.0, rhs = 0.0;
  double p_cell = p.p[std::size_t(nu)][std::size_t(i)];
  double r_nu = spec.r[std::size_t(nu)];

  std::vector<std::size_t> pos(std::size_t(spec.N), 0);
  for (;;) {
    double weight = 1.0;
    for (int v = 0; v < spec.N; ++v) {
      x[std::size_t(v)] = lattice[std::size_t(v)][pos[std::size_t(v)]];
      weight *= pmf[std::size_t(v)][pos[std::size_t(v)]];
    }
    double value = phi(x);
    if (x[std::size_t(nu)][std::size_t(i)] == 0) {
      if (value != 0.0)
        throw contract_error("hudson_lhs_rhs: phi must vanish when the shifted cell is 0");
    } else {
      lhs += weight * value / p_cell;
    }
    std::int64_t row = 0;
    for (auto c : x[std::size_t(nu)]) row += c;
    ++x[std::size_t(nu)][std::size_t(i)];
    double shifted = phi(x);
    if (shifted != 0.0)
      rhs += weight * (r_nu + double(row)) / double(x[std::size_t(nu)][std::size_t(i)]) * shifted;
    --x[std::size_t(nu)][std::size_t(i)];

    int v = spec.N - 1;
    while (v >= 0 && ++pos[std::size_t(v)] == lattice[std::size_t(v)].size()) {
      pos[std::size_t(v)] = 0;
      --v;
    }
    if (v < 0) break;
  }
  return {lhs, rhs};
}

}  // namespace negmn
