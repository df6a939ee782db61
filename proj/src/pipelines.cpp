#include "cocyclelab/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace cocyclelab {

namespace fs = std::filesystem;

namespace {

std::string default_measure(const System& sys) {
  return sys.type() == "sft" ? "max-entropy" : "lebesgue";
}

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

struct PipelineContext {
  const ExperimentConfig& cfg;
  std::shared_ptr<const System> system;
  CocycleGenerator generator;
  std::string out_dir;
  int workers;
  std::string measure;
};

// ---- spectrum --------------------------------------------------------------

bool run_spectrum(PipelineContext& ctx, Json& metrics) {
  require_keys(ctx.cfg.params,
               {"orbit_length", "measure", "compounds", "export_orbit", "expect", "expect_tol"},
               "spectrum.params");
  const Json& p = ctx.cfg.params;
  std::int64_t len = p.value("orbit_length", std::int64_t{100000});
  bool compounds = p.value("compounds", ctx.generator.dim() <= 6);
  std::vector<Point> orbit = ctx.system->sample_orbit(
      ctx.measure, len, ctx.cfg.seed, ctx.generator.dependence_radius() + 2);

  LyapunovSpectrum qr = spectrum_qr(ctx.generator, orbit);
  metrics["exponents"] = vector_to_json(qr.exponents);
  metrics["tail_slope"] = qr.diag.tail_slope;
  metrics["converged"] = qr.diag.converged;
  metrics["det_residual"] = qr.diag.det_residual;

  CsvWriter trace(ctx.out_dir + "/spectrum_trace.csv", "spectrum trace");
  std::string head = "n";
  for (int i = 0; i < ctx.generator.dim(); ++i) head += ",chi" + std::to_string(i);
  trace.raw(head);
  for (const auto& [n, exps] : qr.trace) {
    std::string line = std::to_string(n);
    for (Eigen::Index i = 0; i < exps.size(); ++i) line += "," + fmt_double(exps(i));
    trace.raw(line);
  }

  bool pass = qr.diag.converged && qr.diag.det_residual <= 1e-6;
  if (compounds) {
    LyapunovSpectrum cmp = spectrum_via_compounds(ctx.generator, orbit);
    double agree = (cmp.exponents - qr.exponents).cwiseAbs().maxCoeff();
    metrics["compound_exponents"] = vector_to_json(cmp.exponents);
    metrics["route_agreement"] = agree;
    pass = pass && agree <= 2e-3;
  }
  if (p.contains("expect")) {
    Vector expect(static_cast<Eigen::Index>(p["expect"].size()));
    for (Eigen::Index i = 0; i < expect.size(); ++i) expect(i) = p["expect"][i].get<double>();
    double tol = p.value("expect_tol", 1e-3);
    double err = (qr.exponents - expect).cwiseAbs().maxCoeff();
    metrics["expect_error"] = err;
    pass = pass && err <= tol;
  }
  if (p.value("export_orbit", false)) {
    std::int64_t stride = std::max<std::int64_t>(1, len / 10000);
    std::vector<Point> dec;
    for (std::int64_t i = 0; i < len; i += stride) dec.push_back(orbit[static_cast<std::size_t>(i)]);
    write_orbit_csv(*ctx.system, dec, ctx.out_dir + "/orbit.csv");
  }
  return pass;
}

// ---- periodic-approx -------------------------------------------------------

bool run_periodic_approx(PipelineContext& ctx, Json& metrics) {
  require_keys(ctx.cfg.params,
               {"epsilon", "orbit_length", "max_period", "max_candidates", "spectrum_length",
                "measure"},
               "periodic-approx.params");
  const Json& p = ctx.cfg.params;
  double epsilon = p.value("epsilon", 0.05);
  ApproximationBudget budget;
  budget.orbit_length = p.value("orbit_length", std::int64_t{1} << 20);
  budget.max_period = p.value("max_period", 24);
  budget.max_candidates = p.value("max_candidates", 512);
  budget.spectrum_length = p.value("spectrum_length", std::int64_t{100000});

  ApproximationResult res =
      approximate_exponents_by_periodic(ctx.generator, ctx.measure, epsilon, budget, ctx.cfg.seed);
  metrics["success"] = res.success;
  metrics["epsilon"] = epsilon;
  metrics["period"] = res.period;
  metrics["best_max_gap"] = res.best_max_gap;
  metrics["returns_examined"] = res.returns_examined;
  metrics["delta_achieved"] = res.delta_achieved;
  metrics["steps_scanned"] = res.steps_scanned;
  metrics["target_exponents"] = vector_to_json(res.target_exponents);
  if (res.period > 0) metrics["periodic_exponents"] = vector_to_json(res.periodic_exponents);

  CsvWriter csv(ctx.out_dir + "/periodic_approx.csv", "periodic approximation");
  csv.header({"i", "target", "periodic", "gap"});
  if (res.period > 0)
    for (Eigen::Index i = 0; i < res.gaps.size(); ++i)
      csv.row(static_cast<int>(i), res.target_exponents(i), res.periodic_exponents(i), res.gaps(i));
  return res.success;
}

// ---- growth-bound ----------------------------------------------------------

std::pair<double, double> chi_bounds_from_params(PipelineContext& ctx, const Json& p,
                                                 Json& metrics) {
  if (p.contains("chi_min") && p.contains("chi_max"))
    return {p["chi_min"].get<double>(), p["chi_max"].get<double>()};
  int max_period = p.value("audit_max_period", 8);
  PeriodicDataAudit audit = audit_periodic_data(ctx.generator, max_period);
  metrics["audit_chi_min"] = audit.chi_min_hat;
  metrics["audit_chi_max"] = audit.chi_max_hat;
  metrics["audit_classification"] = to_string(audit.classification);
  metrics["audit_note"] = audit.note;
  return {audit.chi_min_hat, audit.chi_max_hat};
}

bool run_growth_bound(PipelineContext& ctx, Json& metrics) {
  require_keys(ctx.cfg.params,
               {"epsilon", "chi_min", "chi_max", "audit_max_period", "points", "n_max", "measure"},
               "growth-bound.params");
  const Json& p = ctx.cfg.params;
  auto [chi_min, chi_max] = chi_bounds_from_params(ctx, p, metrics);
  SampleSpec spec;
  spec.points = p.value("points", 400);
  spec.n_max = p.value("n_max", 200);
  spec.seed = ctx.cfg.seed;
  GrowthBoundReport rep = verify_growth_bound(ctx.generator, chi_min, chi_max,
                                              p.value("epsilon", 0.1), spec, ctx.measure,
                                              ctx.workers);
  metrics["epsilon"] = rep.epsilon;
  metrics["chi_min"] = chi_min;
  metrics["chi_max"] = chi_max;
  metrics["c_eps"] = rep.c_eps;
  metrics["log_c_eps"] = rep.log_c_eps;
  metrics["stable"] = rep.stable;
  metrics["drift"] = rep.drift;
  CsvWriter csv(ctx.out_dir + "/growth_margins.csv", "growth margins");
  csv.header({"n", "margin"});
  for (std::size_t n = 0; n < rep.margin_by_n.size(); ++n)
    csv.row(static_cast<int>(n + 1), rep.margin_by_n[n]);
  return rep.stable && std::isfinite(rep.c_eps);
}

// ---- uniform-time ----------------------------------------------------------

bool run_uniform_time(PipelineContext& ctx, Json& metrics) {
  require_keys(ctx.cfg.params,
               {"epsilon", "chi_max", "audit_max_period", "points", "n_max", "measure",
                "fresh_check"},
               "uniform-time.params");
  const Json& p = ctx.cfg.params;
  double chi_max = 0.0;
  if (p.contains("chi_max")) {
    chi_max = p["chi_max"].get<double>();
  } else {
    Json tmp;
    chi_max = chi_bounds_from_params(ctx, p, tmp).second;
    metrics["audit"] = tmp;
  }
  double epsilon = p.value("epsilon", 0.05);
  SampleSpec spec;
  spec.points = p.value("points", 1000);
  spec.n_max = p.value("n_max", 2000);
  spec.seed = ctx.cfg.seed;
  UniformTimeResult res = find_uniform_time(ctx.generator, chi_max, epsilon, spec, ctx.measure,
                                            ctx.workers);
  metrics["found"] = res.found;
  metrics["n_epsilon"] = res.n_epsilon;
  metrics["worst_a"] = res.worst_a;
  metrics["subadditivity_residual"] = res.subadditivity_residual;
  metrics["b_relation_residual"] = res.b_relation_residual;

  CsvWriter csv(ctx.out_dir + "/uniform_time.csv", "uniform time");
  csv.header({"n", "max_a"});
  for (std::size_t n = 0; n < res.max_a_by_n.size(); ++n)
    csv.row(static_cast<int>(n + 1), res.max_a_by_n[n]);

  bool pass = res.found && res.subadditivity_residual <= 1e-9 && res.b_relation_residual <= 1e-9;
  if (res.found && p.value("fresh_check", true)) {
    SampleSpec fresh = spec;
    fresh.seed = mix_seed(ctx.cfg.seed, 0xf5e5);
    fresh.n_max = res.n_epsilon;
    UniformTimeResult again = find_uniform_time(ctx.generator, chi_max, epsilon, fresh,
                                                ctx.measure, ctx.workers);
    bool generalizes = again.found && again.n_epsilon <= res.n_epsilon;
    metrics["fresh_n_epsilon"] = again.n_epsilon;
    metrics["generalizes"] = generalizes;
    pass = pass && generalizes;
  }
  return pass;
}

// ---- closing-demo ----------------------------------------------------------

bool run_closing_demo(PipelineContext& ctx, Json& metrics) {
  require_keys(ctx.cfg.params, {"returns", "n_cap", "orbit_length", "measure"},
               "closing-demo.params");
  const Json& p = ctx.cfg.params;
  int want = p.value("returns", 100);
  std::int64_t orbit_length = p.value("orbit_length", std::int64_t{20000});
  const System& sys = *ctx.system;
  int n_cap = p.value("n_cap", 64);
  if (sys.type() == "toral")
    n_cap = static_cast<int>(std::min<std::int64_t>(
        n_cap, dynamic_cast<const ToralSystem&>(sys).pseudo_return_cap()));
  std::vector<Point> orbit =
      sys.sample_orbit(ctx.measure, orbit_length, ctx.cfg.seed, 48 + n_cap);

  CsvWriter csv(ctx.out_dir + "/closing_demo.csv", "closing demo");
  csv.header({"i", "n", "delta", "slack_traj", "slack_stable", "slack_unstable", "pass"});
  int found = 0, passed = 0;
  double delta0 = sys.closing().delta0;
  for (std::int64_t i = 0; i + n_cap < orbit_length && found < want; ++i) {
    for (int n = 1; n <= n_cap && found < want; ++n) {
      double d = sys.distance(orbit[static_cast<std::size_t>(i)],
                              orbit[static_cast<std::size_t>(i + n)]);
      if (!(d < delta0) || d == 0.0) continue;
      ShadowingTriple triple = sys.close_pseudo_return(orbit[static_cast<std::size_t>(i)], n);
      ShadowingReport rep = verify_shadowing(sys, triple);
      ++found;
      if (rep.pass) ++passed;
      csv.row(i, n, triple.delta, rep.traj_xp.worst_slack, rep.stable_py.worst_slack,
              rep.unstable_yx.worst_slack, rep.pass ? 1 : 0);
      i += n;  // move on so returns spread over the orbit
      break;
    }
  }
  metrics["returns_found"] = found;
  metrics["returns_passed"] = passed;
  metrics["closing_c"] = sys.closing().c;
  metrics["closing_lambda"] = sys.closing().lambda;
  metrics["closing_delta0"] = delta0;
  return found == want && passed == found;
}

// ---- shadowing-sweep -------------------------------------------------------

bool run_shadowing_sweep(PipelineContext& ctx, Json& metrics) {
  require_keys(ctx.cfg.params,
               {"radii", "trials", "n_offset", "egrow_epsilon", "min_slope_frac"},
               "shadowing-sweep.params");
  const Json& p = ctx.cfg.params;
  auto sft = std::dynamic_pointer_cast<const SftSystem>(ctx.system);
  if (!sft) fail(ErrorCode::config, "shadowing-sweep requires an SFT system");
  std::vector<int> radii = p.value("radii", std::vector<int>{4, 5, 6, 7, 8, 9, 10});
  int trials = p.value("trials", 8);
  int n_offset = p.value("n_offset", 4);
  double egrow_eps = p.value("egrow_epsilon", 0.05);

  CsvWriter csv(ctx.out_dir + "/shadowing_sweep.csv", "shadowing sweep");
  csv.header({"radius", "delta", "residual_stable", "residual_unstable", "exact_zero"});
  std::vector<std::pair<double, double>> sweep;  // (delta, median residual)
  bool all_zero = true;
  std::int64_t margin = ctx.generator.dependence_radius() + 4;
  for (int r : radii) {
    std::vector<double> vals;
    for (int trial = 0; trial < trials; ++trial) {
      ShadowingTriple triple = engineered_pseudo_return(
          *sft, r, 2 * r + n_offset, margin, mix_seed(ctx.cfg.seed, (r << 8) + trial));
      ShadowingResidual res = shadowing_residual(ctx.generator, triple, egrow_eps);
      csv.row(r, triple.delta, res.residual_stable, res.residual_unstable,
              res.exact_zero ? 1 : 0);
      if (!res.exact_zero) {
        all_zero = false;
        vals.push_back(std::max(res.residual_stable, res.residual_unstable));
      }
    }
    if (!vals.empty()) {
      std::sort(vals.begin(), vals.end());
      double median = vals[vals.size() / 2];
      if (median > 0) sweep.emplace_back(std::pow(sft->metric_base(), -r), median);
    }
  }
  metrics["all_exact_zero"] = all_zero;
  if (all_zero) return true;  // constant generators: residuals identically 0

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto& [d, v] : sweep) {
    double lx = std::log(d), ly = std::log(v);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double n = static_cast<double>(sweep.size());
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  metrics["slope"] = slope;
  metrics["alpha_declared"] = ctx.generator.holder_alpha();
  double frac = p.value("min_slope_frac", 0.8);
  return sweep.size() >= 3 && slope >= frac * ctx.generator.holder_alpha();
}

// ---- transfer --------------------------------------------------------------

bool run_transfer(PipelineContext& ctx, Json& metrics) {
  require_keys(ctx.cfg.params,
               {"delta_net", "max_net_length", "gate_max_period", "gate_tol", "samples",
                "predicate", "save", "sweep_exponents"},
               "transfer.params");
  const Json& p = ctx.cfg.params;
  TransferGate gate;
  gate.max_period = p.value("gate_max_period", 12);
  gate.tol = p.value("gate_tol", 1e-6);
  std::int64_t max_len = p.value("max_net_length", std::int64_t{600000});
  int samples = p.value("samples", 500);

  auto run_one = [&](double delta) {
    DenseOrbitNet net = ctx.system->dense_net(delta, max_len);
    TransferFunction tf = build_transfer(ctx.generator, net, gate);
    CoboundaryResidualReport rep =
        verify_coboundary(ctx.generator, tf, samples, mix_seed(ctx.cfg.seed, 0x7f));
    return std::make_pair(std::move(tf), rep);
  };

  bool pass = true;
  if (p.contains("sweep_exponents")) {
    std::vector<int> exps = p["sweep_exponents"].get<std::vector<int>>();
    CsvWriter csv(ctx.out_dir + "/transfer_sweep.csv", "transfer mesh sweep");
    csv.header({"mesh", "max_residual", "mean_residual"});
    std::vector<std::pair<double, double>> sweep;
    for (int e : exps) {
      auto [tf, rep] = run_one(std::pow(2.0, -e));
      csv.row(tf.net.mesh, rep.max_residual, rep.mean_residual);
      if (rep.max_residual > 1e-13) sweep.emplace_back(tf.net.mesh, rep.max_residual);
    }
    if (sweep.size() >= 3) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (auto& [d, v] : sweep) {
        double lx = std::log(d), ly = std::log(v);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
      }
      double n = static_cast<double>(sweep.size());
      double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
      metrics["sweep_slope"] = slope;
      pass = pass && slope >= 0.8 * ctx.generator.holder_alpha();
    } else {
      metrics["sweep_slope"] = "exact";  // residuals at the floating floor
    }
  }

  double delta = p.value("delta_net", 1.0 / 64.0);
  auto [tf, rep] = run_one(delta);
  metrics["mesh"] = tf.net.mesh;
  metrics["net_size"] = tf.net.points.size();
  metrics["exact_cover"] = tf.net.exact_cover;
  metrics["max_residual"] = rep.max_residual;
  metrics["mean_residual"] = rep.mean_residual;
  metrics["residual_bound"] = rep.bound_used;
  metrics["holder_alpha_hat"] = tf.holder.alpha_hat;
  metrics["holder_c_hat"] = tf.holder.c_hat;
  metrics["sup_group_dist_id"] = tf.sup_group_dist_id;
  pass = pass && rep.pass;

  if (p.contains("predicate")) {
    SubgroupReport sub = subgroup_check(tf, p["predicate"].get<std::string>());
    metrics["subgroup"] = {{"violations", sub.violations},
                           {"max_defect", sub.max_defect},
                           {"generator_defect", sub.generator_defect},
                           {"applicable", sub.applicable}};
    pass = pass && (!sub.applicable || sub.violations == 0);
  }
  if (p.value("save", true))
    save_transfer(tf, ctx.out_dir + "/transfer_meta.json", ctx.out_dir + "/transfer_values.csv");
  return pass;
}

// ---- boundedness -----------------------------------------------------------

bool run_boundedness(PipelineContext& ctx, Json& metrics) {
  require_keys(ctx.cfg.params, {"orbits", "n_max", "measure", "plateau_frac", "expect"},
               "boundedness.params");
  const Json& p = ctx.cfg.params;
  BoundednessAudit audit = boundedness_audit(
      ctx.generator, p.value("orbits", 8), p.value("n_max", std::int64_t{10000}), ctx.cfg.seed,
      ctx.measure, p.value("plateau_frac", 0.01), ctx.workers);
  metrics["bounded"] = audit.bounded;
  metrics["trailing_increase"] = audit.trailing_increase;
  metrics["final_log_sup"] = audit.final_log_sup;
  CsvWriter csv(ctx.out_dir + "/boundedness.csv", "boundedness trace");
  csv.header({"n", "log_sup_dG"});
  for (std::size_t i = 0; i < audit.log_sup_by_n.size(); ++i)
    csv.row(audit.checkpoint_n[i], audit.log_sup_by_n[i]);
  if (p.contains("expect")) {
    bool expect_bounded = p["expect"].get<std::string>() == "bounded";
    return audit.bounded == expect_bounded;
  }
  return audit.bounded;
}

}  // namespace

ExperimentConfig parse_experiment_config(const Json& doc) {
  require_keys(doc, {"pipeline", "seed", "system", "generator", "params"}, "config");
  ExperimentConfig cfg;
  if (!doc.contains("pipeline")) fail(ErrorCode::config, "config: missing pipeline");
  cfg.pipeline = doc["pipeline"].get<std::string>();
  bool known = false;
  for (const char* name : kPipelineNames) known = known || cfg.pipeline == name;
  if (!known) fail(ErrorCode::config, "config: unknown pipeline '" + cfg.pipeline + "'");
  if (!doc.contains("system")) fail(ErrorCode::config, "config: missing system");
  cfg.system = doc["system"];
  cfg.generator = doc.value("generator", Json::object());
  cfg.params = doc.value("params", Json::object());
  cfg.seed = doc.value("seed", std::uint64_t{1});
  return cfg;
}

RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, int workers) {
  fs::create_directories(out_dir);
  PipelineContext ctx{cfg, nullptr, {}, out_dir, std::max(1, workers), ""};
  ctx.system = system_from_json(cfg.system);
  bool needs_generator = cfg.pipeline != "closing-demo";
  if (needs_generator) {
    if (cfg.generator.empty()) fail(ErrorCode::config, "config: missing generator");
    ctx.generator = generator_from_json(ctx.system, cfg.generator);
  }
  ctx.measure = cfg.params.value("measure", default_measure(*ctx.system));

  Json metrics = Json::object();
  bool pass = false;
  if (cfg.pipeline == "spectrum") pass = run_spectrum(ctx, metrics);
  else if (cfg.pipeline == "periodic-approx") pass = run_periodic_approx(ctx, metrics);
  else if (cfg.pipeline == "growth-bound") pass = run_growth_bound(ctx, metrics);
  else if (cfg.pipeline == "uniform-time") pass = run_uniform_time(ctx, metrics);
  else if (cfg.pipeline == "closing-demo") pass = run_closing_demo(ctx, metrics);
  else if (cfg.pipeline == "shadowing-sweep") pass = run_shadowing_sweep(ctx, metrics);
  else if (cfg.pipeline == "transfer") pass = run_transfer(ctx, metrics);
  else if (cfg.pipeline == "boundedness") pass = run_boundedness(ctx, metrics);
  else fail(ErrorCode::config, "unknown pipeline");

  Json full = {{"pipeline", cfg.pipeline},
               {"seed", cfg.seed},
               {"system", cfg.system},
               {"generator", cfg.generator},
               {"params", cfg.params}};
  RunResult result;
  result.pass = pass;
  result.report = Json{{"pipeline", cfg.pipeline},
                       {"version", kVersion},
                       {"seed", cfg.seed},
                       {"config_hash", fnv1a64(full.dump())},
                       {"verdict", pass ? "pass" : "fail"},
                       {"metrics", metrics}};
  std::ofstream rf(out_dir + "/" + cfg.pipeline + ".report.json");
  if (!rf) fail(ErrorCode::io, "cannot write report to " + out_dir);
  rf << result.report.dump(2) << "\n";
  return result;
}

Json report_summary(const std::string& dir) {
  std::vector<fs::path> reports;
  if (!fs::is_directory(dir)) fail(ErrorCode::io, "report_summary: not a directory: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 12 && name.substr(name.size() - 12) == ".report.json")
      reports.push_back(entry.path());
  }
  if (reports.empty()) fail(ErrorCode::io, "report_summary: no *.report.json files in " + dir);
  std::sort(reports.begin(), reports.end());

  Json summary;
  summary["version"] = kVersion;
  summary["reports"] = Json::array();
  bool all_pass = true;
  std::vector<std::string> failing;
  for (const auto& path : reports) {
    std::ifstream in(path);
    Json rep;
    try {
      rep = Json::parse(in);
    } catch (const std::exception& e) {
      fail(ErrorCode::io, "report_summary: corrupt report " + path.string() + ": " + e.what());
    }
    bool pass = rep.value("verdict", "") == "pass";
    all_pass = all_pass && pass;
    if (!pass) failing.push_back(rep.value("pipeline", path.filename().string()));
    summary["reports"].push_back({{"pipeline", rep.value("pipeline", "?")},
                                  {"verdict", rep.value("verdict", "?")},
                                  {"config_hash", rep.value("config_hash", std::uint64_t{0})},
                                  {"seed", rep.value("seed", std::uint64_t{0})}});
  }
  summary["verdict"] = all_pass ? "pass" : "fail";
  summary["failing"] = failing;
  summary["summary_hash"] = fnv1a64(summary.dump());
  return summary;
}

}  // namespace cocyclelab
