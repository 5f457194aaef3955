#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "negmn/errors.hpp"
#include "negmn/rng.hpp"
#include "negmn/special.hpp"

namespace negmn {

using Counts = std::vector<std::int64_t>;        // one population's count vector
using RaggedCounts = std::vector<Counts>;        // x[nu][i]
using Vec = std::vector<double>;
using Ragged = std::vector<Vec>;                 // values per (nu, i)

// Problem dimensions: N populations, vector lengths m[nu], shapes r[nu].
struct ModelSpec {
  int N = 0;
  std::vector<int> m;
  Vec r;

  void validate() const;
};

// Probability parameter with every component positive and each population's
// sum strictly below 1; p0[nu] is the leftover cell mass.
struct ProbParam {
  Ragged p;
  Vec p0;

  static ProbParam from(Ragged components);
  double pdot(int nu) const { return 1.0 - p0[std::size_t(nu)]; }
  void validate_for(const ModelSpec& spec) const;
};

// Observed counts with the row/grand totals.
struct CountData {
  RaggedCounts x;

  std::int64_t row_sum(int nu) const;
  std::int64_t total() const;
  void validate_for(const ModelSpec& spec) const;
};

// Table layout: L tables, table lambda spans populations nu[lambda] (strictly
// increasing, 0-based) and holds l[lambda] trials over the cell grid
// {0..m_nu1} x ... x {0..m_nud}. Cell index 0 on an axis is the leftover cell.
struct TableModel {
  int L = 0;
  std::vector<std::vector<int>> nu;
  std::vector<std::int64_t> l;

  // derived against a spec
  std::vector<std::vector<int>> dims;                       // per table, per axis: m+1
  std::vector<std::vector<std::size_t>> strides;            // row-major
  std::vector<std::size_t> cell_count;
  std::vector<std::vector<std::pair<int, int>>> tables_of;  // per nu: (lambda, axis)

  void build(const ModelSpec& spec);
  int dim(int lambda) const { return int(nu[std::size_t(lambda)].size()); }
  std::size_t cell_index(int lambda, std::span<const int> idx) const;
  void decode_cell(int lambda, std::size_t flat, std::span<int> idx) const;
  std::int64_t trials_touching(int nu) const;  // sum of l over tables containing nu
};

// Dense table counts, one flattened array per table.
struct TableCounts {
  std::vector<Counts> w;

  void validate_for(const TableModel& tm) const;
};

// Per-population cell exposure counts s[nu][i] (i = 0..m_nu) plus the
// multinomial log-coefficient; the table log-pmf is logC + sum s*log p.
struct TableSuffStats {
  Ragged s;  // s[nu][i], i = 0..m_nu (index 0 first)
  double log_coef = 0.0;
};

// --- negative multinomial ---

// log pmf of one population's count vector under shape r and cell
// probabilities p (interior of the open sub-simplex).
double negmn_log_pmf(const Counts& x, double r, const Vec& p);

// Joint log pmf over all populations.
double negmn_joint_log_pmf(const CountData& x, const ModelSpec& spec, const ProbParam& p);

// Two-stage exact sampler: total by negative binomial inversion, split by
// repeated categorical draws.
Counts negmn_sample(CounterRng& rng, double r, const Vec& p);
CountData negmn_sample_all(CounterRng& rng, const ModelSpec& spec, const ProbParam& p);

// Truncation radius K with a certified bound on P(total > K) <= `bound`
// (geometric domination of the pmf ratio). Returns {K, attained bound}.
std::pair<std::int64_t, double> negmn_trunc_radius(double r, double pdot, double eps);

// All count vectors of length m with sum <= max_total (graded lexicographic).
std::vector<Counts> enumerate_ball(int m, std::int64_t max_total);
// All count vectors of length m with sum == total.
std::vector<Counts> enumerate_simplex_shell(int m, std::int64_t total);

// --- multinomial tables ---

std::int64_t table_s(const TableCounts& w, const TableModel& tm, int i, int nu);
TableSuffStats table_suff_stats(const TableCounts& w, const TableModel& tm,
                                const ModelSpec& spec);
double table_log_pmf_from_stats(const TableSuffStats& st, const ProbParam& p);
double table_log_pmf(const TableCounts& w, const TableModel& tm, const ModelSpec& spec,
                     const ProbParam& p);
TableCounts table_sample(CounterRng& rng, const TableModel& tm, const ModelSpec& spec,
                         const ProbParam& p);

// Every w in the finite support (cartesian product of per-table compositions).
std::vector<TableCounts> enumerate_tables(const TableModel& tm);

// --- Hudson identity test utility ---

// Evaluates both sides of the shift identity
//   E[phi(X)/p_{i,nu}] = E[(r_nu + X_{.,nu})/(X_{i,nu}+1) phi(X + e_{i,nu})]
// by exact summation over a truncated lattice carrying mass >= 1 - trunc.
// phi must vanish whenever x_{i,nu} = 0 (checked on the lattice).
std::pair<double, double> hudson_lhs_rhs(
    const std::function<double(const RaggedCounts&)>& phi, const ModelSpec& spec,
    const ProbParam& p, int i, int nu, double trunc);

}  // namespace negmn
