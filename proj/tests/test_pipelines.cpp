#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cocyclelab/pipelines.hpp"

using namespace cocyclelab;
namespace fs = std::filesystem;

namespace {

Json cat_spectrum_config() {
  return Json{{"pipeline", "spectrum"},
              {"seed", 3},
              {"system", {{"type", "toral"}, {"matrix", {{2, 1}, {1, 1}}}}},
              {"generator", {{"kind", "derivative"}}},
              {"params",
               {{"orbit_length", 20000},
                {"expect", {-0.96242365011920694, 0.96242365011920694}},
                {"expect_tol", 2e-3}}}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("cocyclelab-" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config parsing is strict") {
  Json good = cat_spectrum_config();
  ExperimentConfig cfg = parse_experiment_config(good);
  CHECK(cfg.pipeline == "spectrum");
  CHECK(cfg.seed == 3);

  Json unknown_top = good;
  unknown_top["extra"] = 1;
  CHECK_THROWS_AS(parse_experiment_config(unknown_top), Error);

  Json bad_pipeline = good;
  bad_pipeline["pipeline"] = "nope";
  CHECK_THROWS_AS(parse_experiment_config(bad_pipeline), Error);

  Json unknown_param = good;
  unknown_param["params"]["bogus"] = 1;
  ExperimentConfig cfg2 = parse_experiment_config(unknown_param);
  TempDir tmp("strict");
  CHECK_THROWS_AS(run_experiment(cfg2, tmp.path.string(), 1), Error);
}

TEST_CASE("spectrum pipeline: cat map exponents, deterministic outputs") {
  TempDir a("spec-a"), b("spec-b");
  ExperimentConfig cfg = parse_experiment_config(cat_spectrum_config());
  RunResult r1 = run_experiment(cfg, a.path.string(), 1);
  CHECK(r1.pass);
  CHECK(r1.report["verdict"] == "pass");
  CHECK(fs::exists(a.path / "spectrum.report.json"));
  CHECK(fs::exists(a.path / "spectrum_trace.csv"));

  RunResult r2 = run_experiment(cfg, b.path.string(), 2);  // different worker count
  CHECK(slurp(a.path / "spectrum_trace.csv") == slurp(b.path / "spectrum_trace.csv"));
  CHECK(slurp(a.path / "spectrum.report.json") == slurp(b.path / "spectrum.report.json"));
}

TEST_CASE("boundedness pipeline: expectations drive the verdict") {
  TempDir tmp("bound");
  Json doc{{"pipeline", "boundedness"},
           {"seed", 5},
           {"system", {{"type", "toral"}, {"matrix", {{2, 1}, {1, 1}}}}},
           {"generator", {{"kind", "derivative"}}},
           {"params", {{"orbits", 3}, {"n_max", 1500}, {"expect", "unbounded"}}}};
  RunResult r = run_experiment(parse_experiment_config(doc), tmp.path.string(), 1);
  CHECK(r.pass);
  CHECK(r.report["metrics"]["bounded"] == false);
}

TEST_CASE("transfer pipeline: identity cocycle") {
  TempDir tmp("transfer");
  Json doc{{"pipeline", "transfer"},
           {"seed", 7},
           {"system",
            {{"type", "sft"}, {"alphabet", 2}, {"transitions", {{1, 1}, {1, 1}}}}},
           {"generator",
            {{"kind", "constant"}, {"matrix", {{1.0, 0.0}, {0.0, 1.0}}}}},
           {"params", {{"delta_net", 0.125}, {"gate_max_period", 8}, {"samples", 100}}}};
  RunResult r = run_experiment(parse_experiment_config(doc), tmp.path.string(), 1);
  CHECK(r.pass);
  CHECK(r.report["metrics"]["max_residual"].get<double>() <= 1e-12);
  CHECK(fs::exists(tmp.path / "transfer_meta.json"));
  CHECK(fs::exists(tmp.path / "transfer_values.csv"));
}

TEST_CASE("closing-demo pipeline runs without a generator") {
  TempDir tmp("closing");
  Json doc{{"pipeline", "closing-demo"},
           {"seed", 11},
           {"system",
            {{"type", "sft"}, {"alphabet", 2}, {"transitions", {{1, 1}, {1, 1}}}}},
           {"params", {{"returns", 40}, {"orbit_length", 20000}}}};
  RunResult r = run_experiment(parse_experiment_config(doc), tmp.path.string(), 1);
  CHECK(r.pass);
  CHECK(r.report["metrics"]["returns_passed"] == 40);
}

TEST_CASE("summary merges reports and hashes deterministically") {
  TempDir tmp("summary");
  ExperimentConfig cfg = parse_experiment_config(cat_spectrum_config());
  run_experiment(cfg, tmp.path.string(), 1);

  Json doc{{"pipeline", "boundedness"},
           {"seed", 5},
           {"system", {{"type", "toral"}, {"matrix", {{2, 1}, {1, 1}}}}},
           {"generator", {{"kind", "derivative"}}},
           {"params", {{"orbits", 2}, {"n_max", 800}, {"expect", "unbounded"}}}};
  run_experiment(parse_experiment_config(doc), tmp.path.string(), 1);

  Json s1 = report_summary(tmp.path.string());
  CHECK(s1["verdict"] == "pass");
  CHECK(s1["reports"].size() == 2);
  Json s2 = report_summary(tmp.path.string());
  CHECK(s1["summary_hash"] == s2["summary_hash"]);

  // a failing run flips the merged verdict and is listed
  Json failing = doc;
  failing["params"]["expect"] = "bounded";
  run_experiment(parse_experiment_config(failing), tmp.path.string(), 1);
  Json s3 = report_summary(tmp.path.string());
  CHECK(s3["verdict"] == "fail");
  CHECK(s3["failing"].size() == 1);
}

TEST_CASE("growth-bound pipeline picks chi from the audit when omitted") {
  TempDir tmp("growth");
  Json doc{{"pipeline", "growth-bound"},
           {"seed", 13},
           {"system",
            {{"type", "sft"}, {"alphabet", 2}, {"transitions", {{1, 1}, {1, 1}}}}},
           {"generator",
            {{"kind", "conjugated-unipotent"},
             {"m", 2},
             {"alpha", 0.6},
             {"seed", 5},
             {"params", {{"amplitude", 0.9}}}}},
           {"params", {{"epsilon", 0.1}, {"points", 60}, {"n_max", 150}, {"audit_max_period", 6}}}};
  RunResult r = run_experiment(parse_experiment_config(doc), tmp.path.string(), 2);
  CHECK(r.pass);
  CHECK(std::abs(r.report["metrics"]["audit_chi_max"].get<double>()) < 1e-5);
}
