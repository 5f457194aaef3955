#include "negmn/riskharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "negmn/parallel.hpp"

namespace negmn {

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

PointRisk point_risk(const EstimatorFn& est, const ProbParam& p, const ModelSpec& spec,
                     const LossWeights& w, std::int64_t reps, RngSpec rng, int threads) {
  auto rs = point_risk_multi({est}, p, spec, w, reps, rng, threads);
  return rs[0];
}

std::vector<PointRisk> point_risk_multi(const std::vector<EstimatorFn>& ests,
                                        const ProbParam& p, const ModelSpec& spec,
                                        const LossWeights& w, std::int64_t reps,
                                        RngSpec rng, int threads) {
  spec.validate();
  p.validate_for(spec);
  w.validate_for(spec);
  if (reps < 1) throw domain_error("point_risk: reps must be >= 1");

  std::vector<std::vector<double>> losses(ests.size(),
                                          std::vector<double>(std::size_t(reps)));
  parallel_for(reps, threads, [&](std::int64_t rep) {
    CounterRng gen({rng.seed, rng.stream ^ std::uint64_t(rep)});
    CountData x = negmn_sample_all(gen, spec, p);
    for (std::size_t e = 0; e < ests.size(); ++e)
      losses[e][std::size_t(rep)] = loss_std_sq(ests[e](x), p, w);
  });

  std::vector<PointRisk> out(ests.size());
  for (std::size_t e = 0; e < ests.size(); ++e) {
    MeanSe ms = batch_mean_se(losses[e]);
    out[e] = {ms.mean, ms.se};
  }
  return out;
}

namespace {

std::uint64_t pack_counts(const CountData& x) {
  // order-sensitive 64-bit mix of the full count vector
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& row : x.x)
    for (auto v : row) {
      h ^= std::uint64_t(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      h *= 1099511628211ull;
    }
  return h;
}

class CachedEvaluator : public PredMassEvaluator {
 public:
  CachedEvaluator(std::string name) : name_(std::move(name)) {}
  const std::string& name() const override { return name_; }

  std::vector<double> log_mass_all(const CountData& x) override {
    std::uint64_t key = pack_counts(x);
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    std::vector<double> value = compute(x);
    std::lock_guard<std::mutex> lock(mu_);
    cache_.emplace(key, value);
    return value;
  }

 protected:
  virtual std::vector<double> compute(const CountData& x) = 0;

 private:
  std::string name_;
  std::mutex mu_;
  std::map<std::uint64_t, std::vector<double>> cache_;
};

class DirichletEvaluator : public CachedEvaluator {
 public:
  DirichletEvaluator(const ModelSpec& spec, const TableModel& tm,
                     const DirichletPriorSpec& prior, std::string name)
      : CachedEvaluator(std::move(name)), spec_(spec), tm_(tm), prior_(prior) {
    support_ = enumerate_tables(tm_);
  }

 protected:
  std::vector<double> compute(const CountData& x) override {
    std::vector<double> out(support_.size());
    for (std::size_t i = 0; i < support_.size(); ++i)
      out[i] = log_pred_mass_dirichlet(support_[i], x, spec_, tm_, prior_);
    return out;
  }

 private:
  ModelSpec spec_;
  TableModel tm_;
  DirichletPriorSpec prior_;
  std::vector<TableCounts> support_;
};

class ShrinkageEvaluator : public CachedEvaluator {
 public:
  ShrinkageEvaluator(const ModelSpec& spec, const TableModel& tm,
                     const ShrinkagePriorSpec& prior, const QuadratureSpec& quad,
                     std::string name)
      : CachedEvaluator(std::move(name)), spec_(spec), tm_(tm), prior_(prior),
        quad_(quad) {
    support_ = enumerate_tables(tm_);
    for (const auto& w : support_) stats_.push_back(table_suff_stats(w, tm_, spec_));
  }

 protected:
  std::vector<double> compute(const CountData& x) override {
    // the u-integrals depend on w only through the leftover-cell exposures,
    // so integrate once per distinct exposure profile
    std::map<std::vector<std::int64_t>, double> log_num;
    double log_den = integral(x, nullptr);
    std::vector<double> out(support_.size());
    for (std::size_t i = 0; i < support_.size(); ++i) {
      const TableSuffStats& st = stats_[i];
      std::vector<std::int64_t> s0(std::size_t(spec_.N));
      for (int nu = 0; nu < spec_.N; ++nu)
        s0[std::size_t(nu)] = std::int64_t(st.s[std::size_t(nu)][0]);
      auto it = log_num.find(s0);
      if (it == log_num.end())
        it = log_num.emplace(s0, integral(x, &st)).first;
      double acc = st.log_coef + it->second - log_den;
      for (int nu = 0; nu < spec_.N; ++nu)
        for (int i2 = 0; i2 < spec_.m[std::size_t(nu)]; ++i2) {
          double xi = double(x.x[std::size_t(nu)][std::size_t(i2)]);
          double ai = prior_.base.a[std::size_t(nu)][std::size_t(i2)];
          acc += log_gamma(st.s[std::size_t(nu)][std::size_t(i2) + 1] + xi + ai) -
                 log_gamma(xi + ai);
        }
      out[i] = acc;
    }
    return out;
  }

 private:
  double integral(const CountData& x, const TableSuffStats* st) {
    auto log_f = [&](double u) {
      double acc = (prior_.alpha - 1.0) * std::log(u) - prior_.beta * u;
      for (int nu = 0; nu < spec_.N; ++nu) {
        double g = prior_.gamma[std::size_t(nu)];
        double r = spec_.r[std::size_t(nu)];
        double a0 = prior_.base.a0[std::size_t(nu)];
        double adot = prior_.base.adot(nu);
        double xrow = double(x.row_sum(nu));
        double s0 = st ? st->s[std::size_t(nu)][0] : 0.0;
        double ltot = st ? double(tm_.trials_touching(nu)) : 0.0;
        acc += log_gamma(g * u + s0 + r + a0) -
               log_gamma(g * u + ltot + r + a0 + xrow + adot);
      }
      return acc;
    };
    return integrate_log_semiinf(log_f, quad_).log_value;
  }

  ModelSpec spec_;
  TableModel tm_;
  ShrinkagePriorSpec prior_;
  QuadratureSpec quad_;
  std::vector<TableCounts> support_;
  std::vector<TableSuffStats> stats_;
};

class GenericEvaluator : public CachedEvaluator {
 public:
  GenericEvaluator(const ModelSpec& spec, const TableModel& tm,
                   std::function<double(const TableCounts&, const CountData&)> fn,
                   std::string name)
      : CachedEvaluator(std::move(name)), fn_(std::move(fn)) {
    support_ = enumerate_tables(tm);
    (void)spec;
  }

 protected:
  std::vector<double> compute(const CountData& x) override {
    std::vector<double> out(support_.size());
    for (std::size_t i = 0; i < support_.size(); ++i) out[i] = fn_(support_[i], x);
    return out;
  }

 private:
  std::function<double(const TableCounts&, const CountData&)> fn_;
  std::vector<TableCounts> support_;
};

}  // namespace

std::unique_ptr<PredMassEvaluator> make_dirichlet_evaluator(
    const ModelSpec& spec, const TableModel& tm, const DirichletPriorSpec& prior,
    std::string name) {
  return std::make_unique<DirichletEvaluator>(spec, tm, prior, std::move(name));
}

std::unique_ptr<PredMassEvaluator> make_shrinkage_evaluator(
    const ModelSpec& spec, const TableModel& tm, const ShrinkagePriorSpec& prior,
    const QuadratureSpec& quad, std::string name) {
  return std::make_unique<ShrinkageEvaluator>(spec, tm, prior, quad, std::move(name));
}

std::unique_ptr<PredMassEvaluator> make_generic_evaluator(
    const ModelSpec& spec, const TableModel& tm,
    std::function<double(const TableCounts&, const CountData&)> fn, std::string name) {
  return std::make_unique<GenericEvaluator>(spec, tm, std::move(fn), std::move(name));
}

PointRisk pred_risk_kl(PredMassEvaluator& method, const ProbParam& p,
                       const ModelSpec& spec, const TableModel& tm, RngSpec rng,
                       const PredRiskOptions& opt) {
  auto rs = pred_risk_kl_multi({&method}, p, spec, tm, rng, opt);
  return rs[0];
}

std::vector<PointRisk> pred_risk_kl_multi(
    const std::vector<PredMassEvaluator*>& methods, const ProbParam& p,
    const ModelSpec& spec, const TableModel& tm, RngSpec rng,
    const PredRiskOptions& opt) {
  spec.validate();
  p.validate_for(spec);
  if (opt.reps < 1) throw domain_error("pred_risk_kl: reps must be >= 1");

  std::vector<TableCounts> support = enumerate_tables(tm);
  std::vector<double> log_f(support.size()), f(support.size());
  std::map<std::uint64_t, std::size_t> w_index;
  for (std::size_t i = 0; i < support.size(); ++i) {
    log_f[i] = table_log_pmf(support[i], tm, spec, p);
    f[i] = std::exp(log_f[i]);
    CountData probe;
    probe.x.assign(support[i].w.begin(), support[i].w.end());
    w_index[pack_counts(probe)] = i;
  }

  std::vector<std::vector<double>> losses(methods.size(),
                                          std::vector<double>(std::size_t(opt.reps)));
  parallel_for(opt.reps, opt.threads, [&](std::int64_t rep) {
    CounterRng gen({rng.seed, rng.stream ^ std::uint64_t(rep)});
    CountData x = negmn_sample_all(gen, spec, p);
    std::size_t iw = 0;
    if (!opt.exact_w) {
      TableCounts wt = table_sample(gen, tm, spec, p);
      CountData probe;
      probe.x.assign(wt.w.begin(), wt.w.end());
      iw = w_index.at(pack_counts(probe));
    }
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      std::vector<double> lm = methods[mi]->log_mass_all(x);
      double loss;
      if (opt.exact_w) {
        loss = 0.0;
        for (std::size_t i = 0; i < support.size(); ++i)
          loss += f[i] * (log_f[i] - lm[i]);
      } else {
        loss = log_f[iw] - lm[iw];
      }
      losses[mi][std::size_t(rep)] = loss;
    }
  });

  std::vector<PointRisk> out(methods.size());
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    MeanSe ms = batch_mean_se(losses[mi]);
    out[mi] = {ms.mean, ms.se};
  }
  return out;
}

double prial(double risk_base, double risk_improved) {
  if (!(risk_base > 0.0)) throw domain_error("prial: base risk must be > 0");
  return 100.0 * (risk_base - risk_improved) / risk_base;
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Vec mix(const Vec& a, const Vec& b, double w) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - w) * a[i] + w * b[i];
  return out;
}

}  // namespace

std::vector<RiskCell> run_fig1(const Fig1Options& opt) {
  ModelSpec spec;
  spec.N = 2;
  spec.m = {7, 7};

  Vec base0(7, 1.0 / 8.0);
  Vec base1 = {1, 1, 1, 1, 10, 10, 10};
  Vec base2 = {10, 10, 10, 10, 1, 1, 1};
  for (auto& v : base1) v /= 44.0;
  for (auto& v : base2) v /= 44.0;

  LossWeights w;
  w.n = 2;
  w.c = {Vec(7, 1.0), Vec(7, 1.0)};

  struct CaseDef {
    const char* id;
    Vec r;
    bool second_mixes_other;
  };
  std::vector<CaseDef> cases = {
      {"i", {12, 12}, false},
      {"ii", {12, 12}, true},
      {"iii", {8, 16}, false},
      {"iv", {8, 16}, true},
  };

  std::vector<RiskCell> cells;
  for (const auto& cs : cases) {
    spec.r = cs.r;
    ShrinkageSchedule eb = ShrinkageSchedule::eb_ml(spec, Vec(2, 1.0));
    std::vector<EstimatorFn> ests = {
        [&spec](const CountData& x) { return umvu(x, spec); },
        [&spec, eb](const CountData& x) { return shrinkage_estimate(x, spec, eb); },
    };
    for (int j = 0; j <= 5; ++j) {
      double omega = double(j) / 5.0;
      Ragged pr = {mix(base0, base1, omega),
                   mix(base0, cs.second_mixes_other ? base2 : base1, omega)};
      ProbParam p = ProbParam::from(pr);
      std::ostringstream os;
      os << "fig1|" << cs.id << "|" << j;
      RngSpec rng{opt.seed, fnv1a64(os.str())};
      auto risks = point_risk_multi(ests, p, spec, w, opt.reps, rng, opt.threads);
      const char* names[2] = {"umvu", "eb-ml"};
      std::ostringstream om;
      om << j * 2 / 10 << "." << (j * 2) % 10;
      for (int e = 0; e < 2; ++e)
        cells.push_back({"fig1", cs.id, om.str(), names[e], risks[std::size_t(e)].risk,
                         risks[std::size_t(e)].se, opt.reps, opt.seed});
    }
  }
  return cells;
}

std::vector<RiskCell> run_table1(const Table1Options& opt) {
  ModelSpec spec;
  spec.N = 2;
  spec.m = {3, 3};

  TableModel tm;
  tm.L = 2;
  tm.nu = {{0}, {0, 1}};
  tm.l = {1, 1};

  DirichletPriorSpec dir;
  dir.a0 = {-1.0, -1.0};
  dir.a = {Vec(3, 0.5), Vec(3, 0.5)};

  ShrinkagePriorSpec sh;
  sh.alpha = 1.0;
  sh.beta = 1.0;
  sh.gamma = {1.0, 1.0};
  sh.base = dir;

  struct CaseDef {
    const char* id;
    Vec r;
  };
  std::vector<CaseDef> cases = {{"I", {5, 5}}, {"II", {4, 6}}, {"III", {6, 4}}};

  Ragged p0 = {Vec(3, 0.25), Vec(3, 0.25)};
  Ragged p1 = {{1.0 / 6, 1.0 / 6, 2.0 / 6}, {1.0 / 6, 1.0 / 6, 2.0 / 6}};
  Ragged p2 = {{1.0 / 6, 1.0 / 6, 2.0 / 6}, {2.0 / 6, 2.0 / 6, 1.0 / 6}};
  std::vector<std::pair<std::string, Ragged>> grid = {
      {"p0", p0}, {"p1", p1}, {"p2", p2}};

  std::vector<RiskCell> cells;
  for (const auto& cs : cases) {
    spec.r = cs.r;
    tm.build(spec);
    auto jeff = make_dirichlet_evaluator(spec, tm, dir, "jeffreys");
    auto hb = make_shrinkage_evaluator(spec, tm, sh, opt.quad, "hb-shrinkage");
    for (const auto& [pid, praw] : grid) {
      ProbParam p = ProbParam::from(praw);
      RngSpec rng{opt.seed, fnv1a64("table1|" + std::string(cs.id) + "|" + pid)};
      PredRiskOptions pro;
      pro.reps = opt.reps;
      pro.threads = opt.threads;
      pro.exact_w = true;
      auto risks = pred_risk_kl_multi({jeff.get(), hb.get()}, p, spec, tm, rng, pro);
      cells.push_back({"table1", cs.id, pid, "jeffreys", risks[0].risk, risks[0].se,
                       opt.reps, opt.seed});
      cells.push_back({"table1", cs.id, pid, "hb-shrinkage", risks[1].risk, risks[1].se,
                       opt.reps, opt.seed});
      cells.push_back({"table1", cs.id, pid, "prial", prial(risks[0].risk, risks[1].risk),
                       0.0, opt.reps, opt.seed});
    }
  }
  return cells;
}

std::string cells_to_csv(const std::vector<RiskCell>& cells, const std::string& config_echo) {
  std::ostringstream os;
  if (!config_echo.empty()) os << "# " << config_echo << "\n";
  os << "scenario,case,omega_or_p,method,risk,se,reps,seed\n";
  for (const auto& c : cells)
    os << c.scenario << ',' << c.case_id << ',' << c.point_id << ',' << c.method << ','
       << format_double(c.risk) << ',' << format_double(c.se) << ',' << c.reps << ','
       << c.seed << "\n";
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw resource_error("write_file: cannot open " + path);
  out << content;
}

std::string fig1_case_svg(const std::vector<RiskCell>& cells, const std::string& case_id) {
  struct Series {
    std::string method;
    std::vector<std::pair<double, double>> pts;
  };
  std::vector<Series> series;
  double ymax = 0.0;
  for (const auto& c : cells) {
    if (c.case_id != case_id) continue;
    auto it = std::find_if(series.begin(), series.end(),
                           [&](const Series& s) { return s.method == c.method; });
    if (it == series.end()) {
      series.push_back({c.method, {}});
      it = series.end() - 1;
    }
    it->pts.push_back({std::stod(c.point_id), c.risk});
    ymax = std::max(ymax, c.risk);
  }
  const int W = 480, H = 360, ML = 50, MB = 40, MT = 20, MR = 20;
  auto px = [&](double x) { return ML + x * (W - ML - MR); };
  auto py = [&](double y) { return H - MB - y / (ymax * 1.1) * (H - MB - MT); };
  const char* colors[] = {"#000000", "#cc0000", "#0055cc", "#227722"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR << "\" y2=\""
     << H - MB << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\""
     << H - MB << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (W / 2) << "\" y=\"" << H - 8
     << "\" font-size=\"12\" text-anchor=\"middle\">omega (case " << case_id
     << ")</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    std::sort(series[s].pts.begin(), series[s].pts.end());
    os << "<polyline fill=\"none\" stroke=\"" << colors[s % 4] << "\" points=\"";
    for (auto [x, y] : series[s].pts) os << px(x) << ',' << py(y) << ' ';
    os << "\"/>\n";
    for (auto [x, y] : series[s].pts)
      os << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\""
         << colors[s % 4] << "\"/>\n";
    os << "<text x=\"" << ML + 10 << "\" y=\"" << MT + 14 * (s + 1)
       << "\" font-size=\"12\" fill=\"" << colors[s % 4] << "\">" << series[s].method
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace negmn
