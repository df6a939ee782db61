// End-to-end driver for the cocycle-lab CLI: runs every subcommand against a
// committed fixture config and checks exit codes, artifacts, and determinism.
// Usage: cli_e2e <path-to-cocycle-lab> <fixtures-dir>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

int failures = 0;

void expect(bool ok, const std::string& what) {
  std::printf("[%s] %s\n", ok ? "ok" : "FAIL", what.c_str());
  if (!ok) ++failures;
}

int run(const std::string& cmd) {
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: cli_e2e <cocycle-lab> <fixtures-dir>\n");
    return 2;
  }
  const std::string cli = argv[1];
  const fs::path fixtures = argv[2];
  const fs::path work = fs::temp_directory_path() / "cocyclelab-cli-e2e";
  fs::remove_all(work);
  fs::create_directories(work);

  const std::vector<std::string> pipelines = {
      "spectrum",     "periodic-approx", "growth-bound", "uniform-time",
      "closing-demo", "shadowing-sweep", "transfer",     "boundedness"};

  for (const auto& name : pipelines) {
    fs::path cfg = fixtures / (name + ".json");
    expect(fs::exists(cfg), "fixture exists: " + cfg.string());
    fs::path out = work / name;
    int rc = run(cli + " " + name + " --config " + cfg.string() + " --out " + out.string() +
                 " --quiet");
    expect(rc == 0, name + " exits 0");
    expect(fs::exists(out / (name + ".report.json")), name + " wrote a report");
  }

  // determinism: same config + seed => identical data artifacts
  {
    fs::path cfg = fixtures / "spectrum.json";
    fs::path out_a = work / "det-a", out_b = work / "det-b";
    run(cli + " spectrum --config " + cfg.string() + " --out " + out_a.string() + " --quiet");
    run(cli + " spectrum --config " + cfg.string() + " --out " + out_b.string() +
        " --quiet --workers 2");
    expect(slurp(out_a / "spectrum_trace.csv") == slurp(out_b / "spectrum_trace.csv"),
           "spectrum CSV is byte-identical across runs and worker counts");
    expect(slurp(out_a / "spectrum.report.json") == slurp(out_b / "spectrum.report.json"),
           "spectrum report is byte-identical");
  }

  // seed override changes the run, bad config exits 2
  {
    fs::path cfg = fixtures / "spectrum.json";
    fs::path out = work / "seed-override";
    int rc = run(cli + " spectrum --config " + cfg.string() + " --out " + out.string() +
                 " --seed 99 --quiet");
    expect(rc == 0, "seed override accepted");
    fs::path bad = work / "bad.json";
    std::ofstream(bad) << "{\"pipeline\": \"spectrum\", \"bogus\": 1}";
    rc = run(cli + " spectrum --config " + bad.string() + " --out " + (work / "bad-out").string() +
             " --quiet");
    expect(rc == 2, "unknown config key exits 2");
    rc = run(cli + " spectrum --config " + (work / "missing.json").string() + " --quiet");
    expect(rc == 2, "missing config exits 2");
  }

  // summary over all runs
  {
    fs::path all = work / "all";
    fs::create_directories(all);
    for (const auto& name : pipelines) {
      fs::path rep = work / name / (name + ".report.json");
      if (fs::exists(rep)) fs::copy_file(rep, all / (name + ".report.json"));
    }
    int rc = run(cli + " summary --dir " + all.string() + " > " + (work / "summary.txt").string());
    expect(rc == 0, "summary exits 0 when every pipeline passed");
    expect(slurp(work / "summary.txt").find("\"verdict\": \"pass\"") != std::string::npos,
           "summary verdict is pass");
  }

  std::printf("cli_e2e: %d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
