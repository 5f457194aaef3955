#include "negmn/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "negmn/riskharness.hpp"

namespace negmn::config {

namespace {

const json& field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end())
    throw domain_error(std::string("config: missing field '") + name + "'");
  return *it;
}

Vec vec_from(const json& j) { return j.get<Vec>(); }
Ragged ragged_from(const json& j) { return j.get<Ragged>(); }

}  // namespace

void require_schema(const json& j) {
  if (field(j, "schema").get<int>() != 1)
    throw domain_error("config: unsupported schema version (expected 1)");
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec spec;
  spec.m = field(j, "m").get<std::vector<int>>();
  spec.r = vec_from(field(j, "r"));
  spec.N = int(spec.m.size());
  spec.validate();
  return spec;
}

json spec_to_json(const ModelSpec& spec) { return json{{"m", spec.m}, {"r", spec.r}}; }

TableModel table_from_json(const json& j, const ModelSpec& spec) {
  TableModel tm;
  tm.nu = field(j, "nu").get<std::vector<std::vector<int>>>();
  tm.l = field(j, "l").get<std::vector<std::int64_t>>();
  tm.L = int(tm.nu.size());
  tm.build(spec);
  return tm;
}

json table_to_json(const TableModel& tm) { return json{{"nu", tm.nu}, {"l", tm.l}}; }

LossWeights loss_from_json(const json& j, const ModelSpec& spec) {
  LossWeights w;
  w.c = ragged_from(field(j, "c"));
  w.n = field(j, "n").get<int>();
  w.validate_for(spec);
  return w;
}

json loss_to_json(const LossWeights& w) { return json{{"c", w.c}, {"n", w.n}}; }

DirichletPriorSpec dirichlet_from_json(const json& j, const ModelSpec& spec) {
  DirichletPriorSpec p;
  if (j.contains("jeffreys") && j["jeffreys"].get<bool>()) return jeffreys_prior(spec);
  p.a0 = vec_from(field(j, "a0"));
  p.a = ragged_from(field(j, "a"));
  p.validate_for(spec);
  return p;
}

json dirichlet_to_json(const DirichletPriorSpec& p) {
  return json{{"a0", p.a0}, {"a", p.a}};
}

ShrinkagePriorSpec shrinkage_from_json(const json& j, const ModelSpec& spec) {
  ShrinkagePriorSpec p;
  p.alpha = field(j, "alpha").get<double>();
  p.beta = field(j, "beta").get<double>();
  p.gamma = vec_from(field(j, "gamma"));
  p.base = dirichlet_from_json(field(j, "base"), spec);
  p.validate_for(spec);
  return p;
}

json shrinkage_to_json(const ShrinkagePriorSpec& p) {
  return json{{"alpha", p.alpha},
              {"beta", p.beta},
              {"gamma", p.gamma},
              {"base", dirichlet_to_json(p.base)}};
}

QuadratureSpec quad_from_json(const json& j) {
  QuadratureSpec q;
  if (j.contains("rel_tol")) q.rel_tol = j["rel_tol"].get<double>();
  if (j.contains("max_subdivisions")) q.max_subdivisions = j["max_subdivisions"].get<int>();
  q.validate();
  return q;
}

json quad_to_json(const QuadratureSpec& q) {
  return json{{"rel_tol", q.rel_tol}, {"max_subdivisions", q.max_subdivisions}};
}

ProbParam prob_from_json(const json& j, const ModelSpec& spec) {
  ProbParam p = ProbParam::from(ragged_from(j));
  p.validate_for(spec);
  return p;
}

json prob_to_json(const ProbParam& p) { return json(p.p); }

namespace {

struct CommonOpts {
  std::string config_path;
  std::string output_dir = ".";
  std::string format = "csv";
  std::int64_t seed_override = -1;
  std::int64_t reps_override = -1;
  int threads = 0;  // 0: NEGMN_THREADS env or 1
};

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  if (const char* env = std::getenv("NEGMN_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw domain_error("config: cannot open " + path);
  json j = json::parse(in);
  require_schema(j);
  return j;
}

void emit(const CommonOpts& opt, const std::string& filename, const std::string& content) {
  std::filesystem::create_directories(opt.output_dir);
  write_file(opt.output_dir + "/" + filename, content);
}

EstimatorFn estimator_from_json(const json& j, const ModelSpec& spec) {
  std::string type = field(j, "type").get<std::string>();
  if (type == "umvu")
    return [spec](const CountData& x) { return umvu(x, spec); };
  if (type == "eb-ml") {
    Vec at = vec_from(field(j, "atilde"));
    double d0 = j.contains("delta0") ? j["delta0"].get<double>() : 1.0;
    ShrinkageSchedule sched = ShrinkageSchedule::eb_ml(spec, at, d0);
    return [spec, sched](const CountData& x) { return shrinkage_estimate(x, spec, sched); };
  }
  if (type == "eb-moment") {
    ShrinkageSchedule sched = ShrinkageSchedule::eb_moment(spec);
    return [spec, sched](const CountData& x) { return shrinkage_estimate(x, spec, sched); };
  }
  if (type == "eb-affine") {
    EbAffineSpec eb;
    eb.b = vec_from(field(j, "b"));
    if (j.contains("ctilde")) {
      double c = j["ctilde"].get<double>();
      eb.cmat.assign(std::size_t(spec.N), Ragged(std::size_t(spec.N)));
      for (int nu = 0; nu < spec.N; ++nu)
        for (int nup = 0; nup < spec.N; ++nup)
          eb.cmat[std::size_t(nu)][std::size_t(nup)].assign(
              std::size_t(spec.m[std::size_t(nup)]), c);
    } else {
      eb.cmat = field(j, "cmat").get<std::vector<Ragged>>();
    }
    eb.validate_for(spec);
    return [spec, eb](const CountData& x) { return eb_affine(x, spec, eb); };
  }
  throw domain_error("config: unknown estimator type '" + type + "'");
}

int run_simulate_point(const CommonOpts& opt) {
  json j = load_config(opt.config_path);
  std::string scenario = field(j, "scenario").get<std::string>();
  std::int64_t reps = opt.reps_override > 0 ? opt.reps_override
                                            : field(j, "reps").get<std::int64_t>();
  std::uint64_t seed = opt.seed_override >= 0 ? std::uint64_t(opt.seed_override)
                                              : field(j, "seed").get<std::uint64_t>();
  int threads = resolve_threads(opt.threads);

  json echo = j;
  echo["reps"] = reps;
  echo["seed"] = seed;

  std::vector<RiskCell> cells;
  if (scenario == "fig1") {
    Fig1Options fo;
    fo.reps = reps;
    fo.seed = seed;
    fo.threads = threads;
    cells = run_fig1(fo);
    if (j.value("emit_svg", false))
      for (const char* cs : {"i", "ii", "iii", "iv"})
        emit(opt, std::string("fig1_case_") + cs + ".svg", fig1_case_svg(cells, cs));
  } else if (scenario == "custom") {
    ModelSpec spec = spec_from_json(field(j, "spec"));
    LossWeights w = loss_from_json(field(j, "loss"), spec);
    std::vector<EstimatorFn> ests;
    std::vector<std::string> names;
    for (const auto& ej : field(j, "estimators")) {
      ests.push_back(estimator_from_json(ej, spec));
      names.push_back(ej.value("name", field(ej, "type").get<std::string>()));
    }
    for (const auto& pj : field(j, "p_grid")) {
      std::string pid = field(pj, "id").get<std::string>();
      ProbParam p = prob_from_json(field(pj, "p"), spec);
      RngSpec rng{seed, fnv1a64("custom|" + pid)};
      auto risks = point_risk_multi(ests, p, spec, w, reps, rng, threads);
      for (std::size_t e = 0; e < ests.size(); ++e)
        cells.push_back({"custom", "-", pid, names[e], risks[e].risk, risks[e].se, reps,
                         seed});
    }
  } else {
    throw domain_error("config: scenario must be 'fig1' or 'custom'");
  }

  if (opt.format == "json") {
    json out = json::array();
    for (const auto& c : cells)
      out.push_back({{"scenario", c.scenario},
                     {"case", c.case_id},
                     {"omega_or_p", c.point_id},
                     {"method", c.method},
                     {"risk", c.risk},
                     {"se", c.se},
                     {"reps", c.reps},
                     {"seed", c.seed}});
    emit(opt, scenario + "_point.json", json{{"config", echo}, {"cells", out}}.dump(2) + "\n");
  } else {
    emit(opt, scenario + "_point.csv", cells_to_csv(cells, echo.dump()));
  }
  return 0;
}

int run_simulate_pred(const CommonOpts& opt) {
  json j = load_config(opt.config_path);
  std::string scenario = field(j, "scenario").get<std::string>();
  std::int64_t reps = opt.reps_override > 0 ? opt.reps_override
                                            : field(j, "reps").get<std::int64_t>();
  std::uint64_t seed = opt.seed_override >= 0 ? std::uint64_t(opt.seed_override)
                                              : field(j, "seed").get<std::uint64_t>();
  int threads = resolve_threads(opt.threads);
  json echo = j;
  echo["reps"] = reps;
  echo["seed"] = seed;

  std::vector<RiskCell> cells;
  if (scenario == "table1") {
    Table1Options to;
    to.reps = reps;
    to.seed = seed;
    to.threads = threads;
    if (j.contains("quad")) to.quad = quad_from_json(j["quad"]);
    cells = run_table1(to);
  } else if (scenario == "custom") {
    ModelSpec spec = spec_from_json(field(j, "spec"));
    TableModel tm = table_from_json(field(j, "table"), spec);
    QuadratureSpec quad;
    if (j.contains("quad")) quad = quad_from_json(j["quad"]);
    std::vector<std::unique_ptr<PredMassEvaluator>> methods;
    for (const auto& mj : field(j, "methods")) {
      std::string type = field(mj, "type").get<std::string>();
      std::string name = mj.value("name", type);
      if (type == "jeffreys")
        methods.push_back(make_dirichlet_evaluator(spec, tm, jeffreys_prior(spec), name));
      else if (type == "dirichlet")
        methods.push_back(
            make_dirichlet_evaluator(spec, tm, dirichlet_from_json(mj, spec), name));
      else if (type == "shrinkage")
        methods.push_back(make_shrinkage_evaluator(spec, tm, shrinkage_from_json(mj, spec),
                                                   quad, name));
      else
        throw domain_error("config: unknown predictive method '" + type + "'");
    }
    PredRiskOptions pro;
    pro.reps = reps;
    pro.threads = threads;
    pro.exact_w = j.value("exact_w", true);
    for (const auto& pj : field(j, "p_grid")) {
      std::string pid = field(pj, "id").get<std::string>();
      ProbParam p = prob_from_json(field(pj, "p"), spec);
      RngSpec rng{seed, fnv1a64("custom-pred|" + pid)};
      std::vector<PredMassEvaluator*> ptrs;
      for (auto& m : methods) ptrs.push_back(m.get());
      auto risks = pred_risk_kl_multi(ptrs, p, spec, tm, rng, pro);
      for (std::size_t mi = 0; mi < methods.size(); ++mi)
        cells.push_back({"custom", "-", pid, methods[mi]->name(), risks[mi].risk,
                         risks[mi].se, reps, seed});
    }
  } else {
    throw domain_error("config: scenario must be 'table1' or 'custom'");
  }

  if (opt.format == "json") {
    json out = json::array();
    for (const auto& c : cells)
      out.push_back({{"scenario", c.scenario},
                     {"case", c.case_id},
                     {"omega_or_p", c.point_id},
                     {"method", c.method},
                     {"risk", c.risk},
                     {"se", c.se},
                     {"reps", c.reps},
                     {"seed", c.seed}});
    emit(opt, scenario + "_pred.json", json{{"config", echo}, {"cells", out}}.dump(2) + "\n");
  } else {
    emit(opt, scenario + "_pred.csv", cells_to_csv(cells, echo.dump()));
  }
  return 0;
}

int run_check(const CommonOpts& opt, const std::string& theorem_flag) {
  json j = load_config(opt.config_path);
  std::string theorem =
      !theorem_flag.empty() ? theorem_flag : field(j, "theorem").get<std::string>();
  ModelSpec spec = spec_from_json(field(j, "spec"));
  std::int64_t x_max = j.value("x_max", std::int64_t(10000));

  json report;
  if (theorem == "thm1") {
    LossWeights w = loss_from_json(field(j, "loss"), spec);
    const json& sj = field(j, "schedule");
    std::string stype = field(sj, "type").get<std::string>();
    ShrinkageSchedule sched =
        stype == "eb-moment"
            ? ShrinkageSchedule::eb_moment(spec)
            : ShrinkageSchedule::eb_ml(spec, vec_from(field(sj, "atilde")),
                                       sj.value("delta0", 1.0));
    int variant = j.value("variant", 1);
    DominanceVerdict v = check_thm1(spec, w, sched, variant, x_max);
    report = json::parse(v.to_json());
  } else if (theorem == "assumption1") {
    LossWeights w = loss_from_json(field(j, "loss"), spec);
    EbAffineSpec eb;
    eb.b = vec_from(field(field(j, "eb_affine"), "b"));
    eb.cmat = field(field(j, "eb_affine"), "cmat").get<std::vector<Ragged>>();
    DominanceVerdict v = check_assumption1(spec, w, eb, x_max);
    report = json::parse(v.to_json());
  } else if (theorem == "assumption2") {
    LossWeights w = loss_from_json(field(j, "loss"), spec);
    DominanceVerdict v = check_assumption2(spec, w, vec_from(field(j, "btilde")),
                                           field(j, "ctilde").get<double>(), x_max);
    report = json::parse(v.to_json());
  } else if (theorem == "multin") {
    TableModel tm = table_from_json(field(j, "table"), spec);
    ShrinkagePriorSpec prior = shrinkage_from_json(field(j, "prior"), spec);
    DominanceVerdict v = check_thm_multin(spec, tm, prior);
    report = json::parse(v.to_json());
  } else if (theorem == "cor-multin") {
    TableModel tm = table_from_json(field(j, "table"), spec);
    report = json{{"holds", check_cor_multin(spec, tm)}};
  } else {
    throw domain_error("config: unknown theorem '" + theorem + "'");
  }
  report["theorem"] = theorem;
  std::string text = report.dump(2) + "\n";
  std::cout << text;
  emit(opt, "check_" + theorem + ".json", text);
  return 0;
}

int run_verify_identity(const CommonOpts& opt) {
  json j = load_config(opt.config_path);
  ModelSpec spec = spec_from_json(field(j, "spec"));
  ProbParam p = prob_from_json(field(j, "p"), spec);
  FutureSpec fut;
  const json& fj = field(j, "future");
  fut.n = field(fj, "n").get<int>();
  fut.s = vec_from(field(fj, "s"));
  fut.path = fj.value("path", std::string("linear")) == "quadratic"
                 ? FutureSpec::Path::quadratic
                 : FutureSpec::Path::linear;

  auto prior_of = [&](const json& pj) -> NmPrior {
    std::string type = field(pj, "type").get<std::string>();
    if (type == "dirichlet") return dirichlet_from_json(pj, spec);
    if (type == "atoms") {
      GeneralShrinkagePriorSpec g;
      g.u = vec_from(field(pj, "u"));
      g.mass = vec_from(field(pj, "mass"));
      g.gamma = vec_from(field(pj, "gamma"));
      g.base = dirichlet_from_json(field(pj, "base"), spec);
      g.validate_for(spec);
      return g;
    }
    throw domain_error("config: prior type must be 'dirichlet' or 'atoms'");
  };
  NmPrior prior = prior_of(field(j, "prior"));

  RhsOptions ro;
  ro.k_max = j.value("k_max", 400);
  ro.k_exact = j.value("k_exact", 48);
  ro.tau_nodes = j.value("tau_nodes", 64);
  ro.trunc = j.value("trunc", 1e-10);
  double tolerance = j.value("tolerance", 0.0);

  RiskEval lhs = kl_risk_lhs_exact(p, spec, fut, prior, ro.trunc);
  RiskEval rhs = kl_risk_rhs_theorem4(p, spec, fut, prior, ro);
  double residual = std::abs(lhs.value - rhs.value);
  double bound = lhs.error_bound + rhs.error_bound;
  bool ok = residual <= std::max(bound, tolerance);

  json report{{"lhs", lhs.value},
              {"rhs", rhs.value},
              {"residual", residual},
              {"certified-bound", bound},
              {"config", j}};

  if (j.contains("corollary3")) {
    const json& cj = j["corollary3"];
    GeneralShrinkagePriorSpec gm = std::get<GeneralShrinkagePriorSpec>(prior);
    DirichletPriorSpec pd = dirichlet_from_json(field(cj, "dirichlet"), spec);
    RiskEval diff = kl_risk_diff_corollary3(p, spec, fut, gm, pd, ro);
    RiskEval lhs_d = kl_risk_lhs_exact(p, spec, fut, pd, ro.trunc);
    double diff_lhs = lhs.value - lhs_d.value;
    double res3 = std::abs(diff.value - diff_lhs);
    double bound3 = diff.error_bound + lhs.error_bound + lhs_d.error_bound;
    report["corollary3"] = {{"rhs-difference", diff.value},
                            {"lhs-difference", diff_lhs},
                            {"residual", res3},
                            {"certified-bound", bound3}};
    ok = ok && res3 <= std::max(bound3, tolerance);
  }

  report["ok"] = ok;
  std::string text = report.dump(2) + "\n";
  std::cout << text;
  emit(opt, "verify_identity.json", text);
  if (!ok) {
    std::cerr << "verify-identity: residual exceeds the certified bound (achieved "
              << bound << ")\n";
    return 2;
  }
  return 0;
}

int run_pred_mass(const CommonOpts& opt) {
  json j = load_config(opt.config_path);
  ModelSpec spec = spec_from_json(field(j, "spec"));
  TableModel tm = table_from_json(field(j, "table"), spec);
  CountData x;
  x.x = field(j, "x").get<RaggedCounts>();
  x.validate_for(spec);
  QuadratureSpec quad;
  if (j.contains("quad")) quad = quad_from_json(j["quad"]);

  json out = json::array();
  auto support = enumerate_tables(tm);
  for (const auto& mj : field(j, "methods")) {
    std::string type = field(mj, "type").get<std::string>();
    std::string name = mj.value("name", type);
    for (std::size_t wi = 0; wi < support.size(); ++wi) {
      double lm;
      double err = 0.0;
      if (type == "jeffreys")
        lm = log_pred_mass_dirichlet(support[wi], x, spec, tm, jeffreys_prior(spec));
      else if (type == "dirichlet")
        lm = log_pred_mass_dirichlet(support[wi], x, spec, tm,
                                     dirichlet_from_json(mj, spec));
      else if (type == "shrinkage") {
        LogMassResult r = log_pred_mass_shrinkage(support[wi], x, spec, tm,
                                                  shrinkage_from_json(mj, spec), quad);
        lm = r.log_mass;
        err = r.rel_error;
      } else {
        throw domain_error("config: unknown predictive method '" + type + "'");
      }
      out.push_back({{"w-index", wi},
                     {"log-mass", lm},
                     {"method", name},
                     {"error-estimate", err}});
    }
  }
  json report{{"config", j}, {"masses", out}};
  std::string text = report.dump(2) + "\n";
  std::cout << text;
  emit(opt, "pred_mass.json", text);
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"negative multinomial shrinkage estimation and prediction toolkit"};
  app.require_subcommand(1);

  CommonOpts opt;
  std::string theorem_flag;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON config path")->required();
    sub->add_option("--output-dir", opt.output_dir, "output directory");
    sub->add_option("--seed", opt.seed_override, "seed override");
    sub->add_option("--reps", opt.reps_override, "replication override");
    sub->add_option("--threads", opt.threads, "worker threads (or NEGMN_THREADS)");
    sub->add_option("--format", opt.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
  };

  CLI::App* sim_point = app.add_subcommand("simulate-point", "point estimator risks");
  add_common(sim_point);
  CLI::App* sim_pred = app.add_subcommand("simulate-pred", "predictive mass risks");
  add_common(sim_pred);
  CLI::App* check = app.add_subcommand("check", "dominance condition checks");
  add_common(check);
  check->add_option("--theorem", theorem_flag,
                    "thm1 | assumption1 | assumption2 | multin | cor-multin");
  CLI::App* verify = app.add_subcommand("verify-identity", "risk identity verification");
  add_common(verify);
  CLI::App* mass = app.add_subcommand("pred-mass", "predictive masses for one x");
  add_common(mass);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (sim_point->parsed()) return run_simulate_point(opt);
    if (sim_pred->parsed()) return run_simulate_pred(opt);
    if (check->parsed()) return run_check(opt, theorem_flag);
    if (verify->parsed()) return run_verify_identity(opt);
    if (mass->parsed()) return run_pred_mass(opt);
  } catch (const numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << " (achieved " << e.achieved()
              << ")\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace negmn::config
