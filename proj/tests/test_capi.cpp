// Exercises the shared-library C API end to end: handles, error codes,
// pipeline runner, and summary.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include "cocyclelab.h"

namespace fs = std::filesystem;

namespace {

const char* kFullShift = R"({"type":"sft","alphabet":2,"transitions":[[1,1],[1,1]]})";
const char* kCat = R"({"type":"toral","matrix":[[2,1],[1,1]]})";

}  // namespace

TEST_CASE("version and error strings") {
  CHECK(std::strlen(clab_version()) > 0);
  CHECK(clab_last_error() != nullptr);
}

TEST_CASE("system handles: create, inspect, periodic counts") {
  clab_system* sys = nullptr;
  REQUIRE(clab_system_create(kFullShift, &sys) == CLAB_OK);
  char* type = nullptr;
  REQUIRE(clab_system_type(sys, &type) == CLAB_OK);
  CHECK(std::string(type) == "sft");
  clab_string_free(type);
  int64_t count = 0;
  REQUIRE(clab_system_periodic_count(sys, 3, &count) == CLAB_OK);
  CHECK(count == 8);
  clab_system_destroy(sys);

  clab_system* cat = nullptr;
  REQUIRE(clab_system_create(kCat, &cat) == CLAB_OK);
  REQUIRE(clab_system_periodic_count(cat, 2, &count) == CLAB_OK);
  CHECK(count == 5);
  clab_system_destroy(cat);
}

TEST_CASE("error codes and last-error messages") {
  clab_system* sys = nullptr;
  CHECK(clab_system_create("{not json", &sys) == CLAB_ERR_CONFIG);
  CHECK(std::strlen(clab_last_error()) > 0);
  CHECK(clab_system_create(R"({"type":"sft","alphabet":2})", &sys) == CLAB_ERR_CONFIG);
  CHECK(clab_system_create(nullptr, &sys) == CLAB_ERR_INVALID_ARGUMENT);
  CHECK(clab_system_create(R"({"type":"toral","matrix":[[2,0],[0,1]]})", &sys) ==
        CLAB_ERR_CONFIG);  // |det| != 1
}

TEST_CASE("generator handle and quick spectrum") {
  clab_system* cat = nullptr;
  REQUIRE(clab_system_create(kCat, &cat) == CLAB_OK);
  clab_generator* gen = nullptr;
  REQUIRE(clab_generator_create(cat, R"({"kind":"derivative"})", &gen) == CLAB_OK);
  int m = 0;
  REQUIRE(clab_generator_dimension(gen, &m) == CLAB_OK);
  CHECK(m == 2);
  double exps[2] = {0, 0};
  REQUIRE(clab_generator_spectrum(gen, 20000, 3, exps, 2) == CLAB_OK);
  CHECK(std::abs(exps[0] + 0.96242365011920694) < 2e-3);
  CHECK(std::abs(exps[1] - 0.96242365011920694) < 2e-3);
  CHECK(clab_generator_spectrum(gen, 100, 3, exps, 1) == CLAB_ERR_INVALID_ARGUMENT);
  clab_generator_destroy(gen);
  clab_system_destroy(cat);
}

TEST_CASE("pipeline runner and summary through the C API") {
  fs::path dir = fs::temp_directory_path() / "cocyclelab-capi";
  fs::remove_all(dir);
  std::string config = R"({
    "pipeline": "spectrum",
    "seed": 3,
    "system": {"type":"toral","matrix":[[2,1],[1,1]]},
    "generator": {"kind":"derivative"},
    "params": {"orbit_length": 20000,
               "expect": [-0.96242365011920694, 0.96242365011920694],
               "expect_tol": 2e-3}
  })";
  int verdict = 0;
  char* report = nullptr;
  REQUIRE(clab_run_pipeline("spectrum", config.c_str(), dir.string().c_str(), -1, 1, &verdict,
                            &report) == CLAB_OK);
  CHECK(verdict == 1);
  CHECK(std::string(report).find("\"verdict\": \"pass\"") != std::string::npos);
  clab_string_free(report);

  // mismatched subcommand is a config error
  CHECK(clab_run_pipeline("transfer", config.c_str(), dir.string().c_str(), -1, 1, &verdict,
                          nullptr) == CLAB_ERR_CONFIG);

  char* summary = nullptr;
  REQUIRE(clab_report_summary(dir.string().c_str(), &verdict, &summary) == CLAB_OK);
  CHECK(verdict == 1);
  clab_string_free(summary);
  fs::remove_all(dir);
}
