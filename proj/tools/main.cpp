// cocycle-lab: batch experiment runner for hyperbolic matrix-cocycle
// pipelines. Thin shell over the cocyclelab shared library's C API.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "cocyclelab.h"

namespace {

int fail_with(const char* what, clab_status status) {
  std::fprintf(stderr, "error: %s (%s)\n", clab_last_error(), what);
  // configuration problems exit 2, everything else is a run failure
  return (status == CLAB_ERR_CONFIG || status == CLAB_ERR_INVALID_ARGUMENT ||
          status == CLAB_ERR_IO)
             ? 2
             : 1;
}

std::string default_out_dir() {
  if (const char* env = std::getenv("COCYCLE_LAB_OUT")) return env;
  return "out";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("cocycle-lab ") + clab_version() +
               " - experiment pipelines for matrix cocycles over hyperbolic systems"};
  app.require_subcommand(1);

  std::string config_path, out_dir = default_out_dir();
  long long seed_override = -1;
  int workers = 1;
  bool quiet = false;

  const char* pipelines[] = {"spectrum",     "periodic-approx", "growth-bound",
                             "uniform-time", "closing-demo",    "shadowing-sweep",
                             "transfer",     "boundedness"};
  for (const char* name : pipelines) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " pipeline");
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", seed_override, "override the config seed");
    sub->add_option("--out", out_dir, "output directory (env COCYCLE_LAB_OUT)");
    sub->add_option("--workers", workers, "worker threads (never changes results)");
    sub->add_flag("--quiet", quiet, "suppress the report on stdout");
  }
  std::string summary_dir;
  auto* summary = app.add_subcommand("summary", "merge all reports in a directory");
  summary->add_option("--dir", summary_dir, "directory with *.report.json files")->required();

  CLI11_PARSE(app, argc, argv);

  if (summary->parsed()) {
    int verdict = 0;
    char* text = nullptr;
    clab_status st = clab_report_summary(summary_dir.c_str(), &verdict, &text);
    if (st != CLAB_OK) return fail_with("summary", st);
    std::printf("%s\n", text);
    clab_string_free(text);
    return verdict ? 0 : 1;
  }

  const std::string pipeline = app.get_subcommands().front()->get_name();
  std::ifstream in(config_path);
  if (!in) {
    std::fprintf(stderr, "error: cannot read config %s\n", config_path.c_str());
    return 2;
  }
  std::stringstream buffer;
  buffer << in.rdbuf();

  int verdict = 0;
  char* report = nullptr;
  clab_status st = clab_run_pipeline(pipeline.c_str(), buffer.str().c_str(), out_dir.c_str(),
                                     seed_override, workers, &verdict, &report);
  if (st != CLAB_OK) return fail_with(pipeline.c_str(), st);
  if (!quiet) std::printf("%s\n", report);
  clab_string_free(report);
  return verdict ? 0 : 1;
}
