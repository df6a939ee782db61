#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cocyclelab {

inline constexpr const char* kVersion = "0.1.0";

// Stable error taxonomy; the C API maps codes one-to-one.
enum class ErrorCode : int {
  invalid_argument = 1,
  config = 2,
  precondition = 3,
  window_exhausted = 4,
  singular_matrix = 5,
  size_limit = 6,
  coverage = 7,
  degenerate_spectrum = 8,
  io = 9,
  internal = 10,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

using Rng = std::mt19937_64;

// Derives an independent stream from (seed, stream) so that callers can hand
// out per-task RNGs without sharing state.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(mix_seed(seed, stream));
}

// FNV-1a, used for config hashes in reports.
std::uint64_t fnv1a64(const std::string& data);

// Runs f(i) for i in [0, n) over `workers` threads. Results are stored by
// index, so the output is independent of the worker count.
template <typename T, typename F>
std::vector<T> parallel_map(std::size_t n, int workers, F&& f) {
  std::vector<T> out(n);
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::vector<std::thread> pool;
  std::size_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    std::size_t lo = w * chunk;
    std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i) out[i] = f(i);
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace cocyclelab
