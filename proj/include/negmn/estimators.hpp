#pragma once

#include <cstdint>
#include <vector>

#include "negmn/model.hpp"

namespace negmn {

// Loss weights c[nu][i] >= 0 with the first n populations entering the loss.
struct LossWeights {
  Ragged c;
  int n = 0;

  void validate_for(const ModelSpec& spec) const;
  double row_sum(int nu) const;            // c_{.,nu}
  double row_max(int nu) const;            // max_i c_{i,nu}
  double min_row_sum() const;              // over nu < n
  double max_cell() const;                 // over nu < n
};

// Data-dependent denominator inflation delta_nu(x_total).
class ShrinkageSchedule {
 public:
  // maximum-likelihood empirical Bayes family:
  //   delta_nu(x) = m_nu + (atilde_nu / x) * sum_nu' m r / atilde,   x >= 1
  static ShrinkageSchedule eb_ml(const ModelSpec& spec, Vec atilde, double delta0 = 1.0);
  // moment-matched variant (atilde = 1): delta_nu(x) = m_nu + 1 + sum(m r)/x
  static ShrinkageSchedule eb_moment(const ModelSpec& spec, double delta0 = 1.0);
  // tabulated values per x plus a constant continuation beyond the table
  static ShrinkageSchedule custom(std::vector<Vec> table, Vec limit);

  Vec eval(std::int64_t x_total) const;  // one value per population
  Vec limit() const;                     // x -> infinity
  int populations() const { return int(limit_.size()); }

 private:
  enum class Kind { EbMl, EbMoment, Custom };
  Kind kind_ = Kind::EbMl;
  Vec m_;              // per-population m (EB families)
  Vec coef_;           // EB-ML: atilde_nu * sum(m r / atilde); EB-moment: unused
  double moment_sum_ = 0.0;
  double delta0_ = 1.0;
  std::vector<Vec> table_;
  Vec limit_;
};

struct RhoResult {
  double rho = 1.0;
  std::int64_t argmin_x = 0;   // 0 when the infimum is only approached at infinity
  bool attained_at_limit = false;
};

// Affine empirical Bayes shrinkage: denominator gains btilde_nu + 1/Xtilde
// where Xtilde = sum over cells of ctilde^{(nu)} * X.
struct EbAffineSpec {
  Vec b;                    // btilde_nu > 0
  std::vector<Ragged> cmat; // cmat[nu][nu'][i] > 0

  void validate_for(const ModelSpec& spec) const;
};

Ragged umvu(const CountData& x, const ModelSpec& spec);
Ragged shrinkage_estimate(const CountData& x, const ModelSpec& spec,
                          const ShrinkageSchedule& delta);
Ragged eb_ml(const CountData& x, const ModelSpec& spec, const Vec& atilde,
             double delta0 = 1.0);
Ragged eb_affine(const CountData& x, const ModelSpec& spec, const EbAffineSpec& eb);

// inf over x >= 2 of min/max (over nu < n) of the EB-ML schedule ratio;
// closed form for atilde = m and atilde = 1, scan plus limit otherwise.
RhoResult eb_rho_detail(const Vec& atilde, const ModelSpec& spec, int n,
                        std::int64_t x_max);
double eb_rho(const Vec& atilde, const ModelSpec& spec, int n, std::int64_t x_max);

// rho for an arbitrary schedule (scan to x_max plus the declared limit).
RhoResult schedule_rho(const ShrinkageSchedule& delta, int n, std::int64_t x_max);

double loss_std_sq(const Ragged& d, const ProbParam& p, const LossWeights& w);

}  // namespace negmn
