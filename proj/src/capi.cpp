#include "cocyclelab.h"

#include <cstring>
#include <memory>
#include <string>

#include "cocyclelab/pipelines.hpp"

#if defined(_WIN32)
#define CLAB_EXPORT __declspec(dllexport)
#else
#define CLAB_EXPORT __attribute__((visibility("default")))
#endif

namespace {

thread_local std::string g_last_error;

clab_status status_from(const cocyclelab::Error& e) {
  using cocyclelab::ErrorCode;
  switch (e.code()) {
    case ErrorCode::invalid_argument: return CLAB_ERR_INVALID_ARGUMENT;
    case ErrorCode::config: return CLAB_ERR_CONFIG;
    case ErrorCode::precondition: return CLAB_ERR_PRECONDITION;
    case ErrorCode::window_exhausted: return CLAB_ERR_WINDOW_EXHAUSTED;
    case ErrorCode::singular_matrix: return CLAB_ERR_SINGULAR_MATRIX;
    case ErrorCode::size_limit: return CLAB_ERR_SIZE_LIMIT;
    case ErrorCode::coverage: return CLAB_ERR_COVERAGE;
    case ErrorCode::degenerate_spectrum: return CLAB_ERR_DEGENERATE_SPECTRUM;
    case ErrorCode::io: return CLAB_ERR_IO;
    default: return CLAB_ERR_INTERNAL;
  }
}

template <typename F>
clab_status guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const cocyclelab::Error& e) {
    g_last_error = e.what();
    return status_from(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CLAB_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return CLAB_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

struct clab_system {
  std::shared_ptr<cocyclelab::System> impl;
};

struct clab_generator {
  cocyclelab::CocycleGenerator impl;
};

extern "C" {

CLAB_EXPORT const char* clab_version(void) { return cocyclelab::kVersion; }

CLAB_EXPORT const char* clab_last_error(void) { return g_last_error.c_str(); }

CLAB_EXPORT void clab_string_free(char* s) { std::free(s); }

CLAB_EXPORT clab_status clab_system_create(const char* spec_json, clab_system** out) {
  return guarded([&]() -> clab_status {
    if (!spec_json || !out) {
      g_last_error = "null argument";
      return CLAB_ERR_INVALID_ARGUMENT;
    }
    auto spec = cocyclelab::Json::parse(spec_json, nullptr, false);
    if (spec.is_discarded()) {
      g_last_error = "system spec is not valid JSON";
      return CLAB_ERR_CONFIG;
    }
    *out = new clab_system{cocyclelab::system_from_json(spec)};
    return CLAB_OK;
  });
}

CLAB_EXPORT void clab_system_destroy(clab_system* sys) { delete sys; }

CLAB_EXPORT clab_status clab_system_type(const clab_system* sys, char** out) {
  return guarded([&]() -> clab_status {
    if (!sys || !out) {
      g_last_error = "null argument";
      return CLAB_ERR_INVALID_ARGUMENT;
    }
    *out = dup_string(sys->impl->type());
    return CLAB_OK;
  });
}

CLAB_EXPORT clab_status clab_system_periodic_count(const clab_system* sys, int n, int64_t* out) {
  return guarded([&]() -> clab_status {
    if (!sys || !out) {
      g_last_error = "null argument";
      return CLAB_ERR_INVALID_ARGUMENT;
    }
    *out = static_cast<int64_t>(sys->impl->enumerate_periodic(n).size());
    return CLAB_OK;
  });
}

CLAB_EXPORT clab_status clab_generator_create(const clab_system* sys, const char* gen_json,
                                              clab_generator** out) {
  return guarded([&]() -> clab_status {
    if (!sys || !gen_json || !out) {
      g_last_error = "null argument";
      return CLAB_ERR_INVALID_ARGUMENT;
    }
    auto spec = cocyclelab::Json::parse(gen_json, nullptr, false);
    if (spec.is_discarded()) {
      g_last_error = "generator spec is not valid JSON";
      return CLAB_ERR_CONFIG;
    }
    *out = new clab_generator{cocyclelab::generator_from_json(sys->impl, spec)};
    return CLAB_OK;
  });
}

CLAB_EXPORT void clab_generator_destroy(clab_generator* gen) { delete gen; }

CLAB_EXPORT clab_status clab_generator_dimension(const clab_generator* gen, int* out) {
  return guarded([&]() -> clab_status {
    if (!gen || !out) {
      g_last_error = "null argument";
      return CLAB_ERR_INVALID_ARGUMENT;
    }
    *out = gen->impl.dim();
    return CLAB_OK;
  });
}

CLAB_EXPORT clab_status clab_generator_spectrum(const clab_generator* gen, int64_t orbit_length,
                                                uint64_t seed, double* exponents, int capacity) {
  return guarded([&]() -> clab_status {
    if (!gen || !exponents) {
      g_last_error = "null argument";
      return CLAB_ERR_INVALID_ARGUMENT;
    }
    if (capacity < gen->impl.dim()) {
      g_last_error = "exponent buffer too small";
      return CLAB_ERR_INVALID_ARGUMENT;
    }
    const auto& sys = gen->impl.system();
    std::string measure = sys.type() == "sft" ? "max-entropy" : "lebesgue";
    auto orbit = sys.sample_orbit(measure, orbit_length, seed,
                                  gen->impl.dependence_radius() + 2);
    auto spec = cocyclelab::spectrum_qr(gen->impl, orbit);
    for (int i = 0; i < gen->impl.dim(); ++i) exponents[i] = spec.exponents(i);
    return CLAB_OK;
  });
}

CLAB_EXPORT clab_status clab_run_pipeline(const char* pipeline, const char* config_json,
                                          const char* out_dir, int64_t seed_override, int workers,
                                          int* verdict_out, char** report_json_out) {
  return guarded([&]() -> clab_status {
    if (!config_json || !out_dir || !verdict_out) {
      g_last_error = "null argument";
      return CLAB_ERR_INVALID_ARGUMENT;
    }
    auto doc = cocyclelab::Json::parse(config_json, nullptr, false);
    if (doc.is_discarded()) {
      g_last_error = "config is not valid JSON";
      return CLAB_ERR_CONFIG;
    }
    auto cfg = cocyclelab::parse_experiment_config(doc);
    if (pipeline && *pipeline && cfg.pipeline != pipeline) {
      g_last_error = "config pipeline '" + cfg.pipeline + "' does not match requested '" +
                     pipeline + "'";
      return CLAB_ERR_CONFIG;
    }
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    auto result = cocyclelab::run_experiment(cfg, out_dir, workers);
    *verdict_out = result.pass ? 1 : 0;
    if (report_json_out) *report_json_out = dup_string(result.report.dump(2));
    return CLAB_OK;
  });
}

CLAB_EXPORT clab_status clab_report_summary(const char* dir, int* verdict_out,
                                            char** summary_json_out) {
  return guarded([&]() -> clab_status {
    if (!dir || !verdict_out) {
      g_last_error = "null argument";
      return CLAB_ERR_INVALID_ARGUMENT;
    }
    auto summary = cocyclelab::report_summary(dir);
    *verdict_out = summary.value("verdict", "") == "pass" ? 1 : 0;
    if (summary_json_out) *summary_json_out = dup_string(summary.dump(2));
    return CLAB_OK;
  });
}

}  // extern "C"
