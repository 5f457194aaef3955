#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "negmn/estimators.hpp"
#include "negmn/model.hpp"
#include "negmn/predictive.hpp"

namespace negmn {

std::uint64_t fnv1a64(const std::string& s);

struct RiskCell {
  std::string scenario;
  std::string case_id;
  std::string point_id;  // omega value or the parameter grid label
  std::string method;
  double risk = 0.0;
  double se = 0.0;
  std::int64_t reps = 0;
  std::uint64_t seed = 0;
};

using EstimatorFn = std::function<Ragged(const CountData&)>;

struct PointRisk {
  double risk = 0.0;
  double se = 0.0;
};

// Monte Carlo risk of one estimator under the standardized squared loss.
PointRisk point_risk(const EstimatorFn& est, const ProbParam& p, const ModelSpec& spec,
                     const LossWeights& w, std::int64_t reps, RngSpec rng, int threads);

// Shared-draw variant: every estimator sees the same replication stream.
std::vector<PointRisk> point_risk_multi(const std::vector<EstimatorFn>& ests,
                                        const ProbParam& p, const ModelSpec& spec,
                                        const LossWeights& w, std::int64_t reps,
                                        RngSpec rng, int threads);

// Predictive-mass evaluator over the enumerated table support, memoized per
// observed count vector; implementations are pure so caching is value-safe.
class PredMassEvaluator {
 public:
  virtual ~PredMassEvaluator() = default;
  virtual const std::string& name() const = 0;
  // log mass for every support element, in enumerate_tables order
  virtual std::vector<double> log_mass_all(const CountData& x) = 0;
};

std::unique_ptr<PredMassEvaluator> make_dirichlet_evaluator(
    const ModelSpec& spec, const TableModel& tm, const DirichletPriorSpec& prior,
    std::string name);
std::unique_ptr<PredMassEvaluator> make_shrinkage_evaluator(
    const ModelSpec& spec, const TableModel& tm, const ShrinkagePriorSpec& prior,
    const QuadratureSpec& quad, std::string name);
// Arbitrary log-mass function (used for oracle methods in tests).
std::unique_ptr<PredMassEvaluator> make_generic_evaluator(
    const ModelSpec& spec, const TableModel& tm,
    std::function<double(const TableCounts&, const CountData&)> fn, std::string name);

struct PredRiskOptions {
  std::int64_t reps = 10000;
  int threads = 1;
  bool exact_w = true;  // integrate over the table support instead of sampling it
};

// Kullback-Leibler risk of a predictive mass; draws X, and either averages the
// exact loss over the table support or samples one table per replication.
PointRisk pred_risk_kl(PredMassEvaluator& method, const ProbParam& p,
                       const ModelSpec& spec, const TableModel& tm, RngSpec rng,
                       const PredRiskOptions& opt);
std::vector<PointRisk> pred_risk_kl_multi(
    const std::vector<PredMassEvaluator*>& methods, const ProbParam& p,
    const ModelSpec& spec, const TableModel& tm, RngSpec rng,
    const PredRiskOptions& opt);

// Percentage relative improvement in average loss.
double prial(double risk_base, double risk_improved);

struct Fig1Options {
  std::int64_t reps = 100000;
  std::uint64_t seed = 1;
  int threads = 1;
};
std::vector<RiskCell> run_fig1(const Fig1Options& opt);

struct Table1Options {
  std::int64_t reps = 10000;
  std::uint64_t seed = 1;
  int threads = 1;
  QuadratureSpec quad;
};
std::vector<RiskCell> run_table1(const Table1Options& opt);

// CSV with fixed columns scenario,case,omega_or_p,method,risk,se,reps,seed;
// config_echo is written as a leading comment line.
std::string cells_to_csv(const std::vector<RiskCell>& cells, const std::string& config_echo);
void write_file(const std::string& path, const std::string& content);

// Risk-versus-omega line chart, one polyline per method.
std::string fig1_case_svg(const std::vector<RiskCell>& cells, const std::string& case_id);

}  // namespace negmn
