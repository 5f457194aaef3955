#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "negmn/estimators.hpp"
#include "negmn/predictive.hpp"

namespace negmn {

enum class TailVerdict { holds_in_limit, fails_in_limit, inconclusive };

// Outcome of a sufficient-condition check. holds = true means the condition is
// satisfied on the scanned horizon and in the limit; it never asserts that
// dominance fails, only that this particular sufficient condition does.
struct DominanceVerdict {
  bool holds = false;
  std::int64_t checked_horizon = 0;
  TailVerdict tail = TailVerdict::inconclusive;
  std::vector<std::int64_t> witnesses;  // x values violating the condition
  std::string reason;                   // first failure, empty when holds

  std::string to_json() const;
};

// Two-branch unbalanced-shrinkage condition: checks the preamble (shape lower
// bounds, weight balance, the x delta(x) monotonicity) and, for each x on the
// horizon, the selected variant's implication pair, then classifies the tail
// by substituting the schedule's limit.
DominanceVerdict check_thm1(const ModelSpec& spec, const LossWeights& w,
                            const ShrinkageSchedule& delta, int variant,
                            std::int64_t x_max);

// Affine-shrinkage condition with per-population weight arrays (items (a)-(d),
// general weights).
DominanceVerdict check_assumption1(const ModelSpec& spec, const LossWeights& w,
                                   const EbAffineSpec& eb, std::int64_t x_max);

// Affine-shrinkage condition in the scalar-weight case: every ctilde^{(nu)}
// equals ctilde * ones by construction of the inputs.
DominanceVerdict check_assumption2(const ModelSpec& spec, const LossWeights& w,
                                   const Vec& btilde, double ctilde,
                                   std::int64_t x_max);

// Predictive-mass dominance condition for the shrinkage prior over the base
// Dirichlet prior. The condition is affine in x, so the for-all-x quantifier
// reduces to a closed-form criterion; no horizon is needed.
DominanceVerdict check_thm_multin(const ModelSpec& spec, const TableModel& tm,
                                  const ShrinkagePriorSpec& prior);

// Inadmissibility window for the Jeffreys-prior predictive mass:
// 1 <= r_nu, r_nu > (m_nu - 1)/2 > total trials touching nu, for every nu.
bool check_cor_multin(const ModelSpec& spec, const TableModel& tm);

}  // namespace negmn
