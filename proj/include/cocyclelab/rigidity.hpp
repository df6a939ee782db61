#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cocyclelab/lyapunov.hpp"

namespace cocyclelab {

struct PeriodicOrbitRecord {
  Point p;
  int period = 0;        // exact period
  int power = 0;         // n used for the product (= period)
  double dist_id = 0.0;  // ||A(p,n) - Id||
  double group_dist_id = 0.0;
  double log_norm = 0.0;      // log ||A(p,n)||
  double log_norm_inv = 0.0;  // log ||A(p,n)^{-1}||
  Vector eigen_log_moduli;    // of A(p,n), ascending
  Vector exponents;           // (1/n) log moduli, ascending
};

struct PeriodicDataAudit {
  std::vector<PeriodicOrbitRecord> records;
  double chi_min_hat = 0.0;
  double chi_max_hat = 0.0;
  PeriodicDataClass classification = PeriodicDataClass::unknown;
  int max_period = 0;
  double trivial_tol = 0.0;
  std::string note;  // heuristic label: periods actually covered
};

// Exhaustive audit of A(p, n) over all periodic points with period <= max_period.
// Classification: trivial when every ||A(p,n) - Id|| <= trivial_tol; otherwise
// bounded/general from the growth trend of d_G(A(p,n), Id) across periods.
PeriodicDataAudit audit_periodic_data(const CocycleGenerator& gen, int max_period,
                                      double trivial_tol = 1e-6);

struct ApproximationBudget {
  std::int64_t orbit_length = 1 << 20;
  int max_period = 24;
  int max_candidates = 512;
  std::int64_t spectrum_length = 100000;
};

struct ApproximationResult {
  Vector target_exponents;
  Vector periodic_exponents;
  Vector gaps;  // |chi_i - chi_i^{(p)}|
  Point p;
  int period = 0;
  bool success = false;
  double best_max_gap = std::numeric_limits<double>::infinity();
  std::int64_t returns_examined = 0;
  double delta_achieved = std::numeric_limits<double>::infinity();
  std::int64_t steps_scanned = 0;
};

// Scans a typical orbit for pseudo-returns, closes each candidate, and
// accepts the first periodic orbit whose exponents are all within epsilon of
// the orbit spectrum. Budget exhaustion returns the best candidate found.
ApproximationResult approximate_exponents_by_periodic(const CocycleGenerator& gen,
                                                      std::string_view measure, double epsilon,
                                                      const ApproximationBudget& budget,
                                                      std::uint64_t seed);

struct SampleSpec {
  int points = 1000;
  int n_max = 200;
  std::uint64_t seed = 1;
};

struct GrowthBoundReport {
  double epsilon = 0.0;
  double chi_min = 0.0;
  double chi_max = 0.0;
  double c_eps = 1.0;       // smallest constant making both bounds hold on the grid
  double log_c_eps = 0.0;
  bool stable = false;      // margins do not drift upward with n
  double drift = 0.0;       // trailing-half slope of the margin curve
  std::vector<double> margin_by_n;  // max over x of (log||A(x,n)|| - n(chi_max + eps)), n >= 1
  int samples = 0;
  int n_max = 0;
};

// Fits c_eps in ||A(x,n)|| <= c_eps e^{n(chi_max + eps)} and
// ||A(x,n)^{-1}|| <= c_eps e^{n(-chi_min + eps)} over a sample grid.
GrowthBoundReport verify_growth_bound(const CocycleGenerator& gen, double chi_min, double chi_max,
                                      double epsilon, const SampleSpec& spec,
                                      std::string_view measure, int workers = 1);

struct UniformTimeResult {
  bool found = false;
  int n_epsilon = 0;
  double worst_a = 0.0;  // max over the sample of a_{N}(x)
  std::vector<double> max_a_by_n;
  double subadditivity_residual = 0.0;  // worst violation of a_{n+k} <= a_n(f^k x) + a_k
  double b_relation_residual = 0.0;     // worst violation of a_n <= a_{n+k} + b_k(f^n x)
  int samples = 0;
};

// Smallest N in [1, spec.n_max] with a_N(x) < 0 for every sampled x, where
// a_n(x) = log||A(x,n)|| - (chi_max + eps) n. Also checks the subadditivity
// relations on sampled triples.
UniformTimeResult find_uniform_time(const CocycleGenerator& gen, double chi_max, double epsilon,
                                    const SampleSpec& spec, std::string_view measure,
                                    int workers = 1);

struct ShadowingResidual {
  double residual_stable = 0.0;    // ||A(p,n)^{-1} A(y,n) - Id||
  double residual_unstable = 0.0;  // ||A(x,n) A(y,n)^{-1} - Id||
  bool exact_zero = false;         // products coincided bitwise (constant generators)
  double egrow_log_c = 0.0;        // empirical c in ||A(.,i)||^{+-1} <= c e^{eps i} along the triple
  double egrow_epsilon = 0.0;
};

// Residuals of the closing pairs (p, y) and (x, y); the subexponential
// growth hypothesis is measured along the triple and reported.
ShadowingResidual shadowing_residual(const CocycleGenerator& gen, const ShadowingTriple& triple,
                                     double egrow_epsilon = 0.05);

struct BoundednessAudit {
  std::vector<double> log_sup_by_n;  // running sup of log d_G(A(x,k), Id), k <= n (decimated)
  std::vector<std::int64_t> checkpoint_n;
  bool bounded = false;
  double trailing_increase = 0.0;  // relative growth of the sup over the trailing half
  double final_log_sup = 0.0;
  int orbits = 0;
  std::int64_t n_max = 0;
};

// Tracks sup d_G(A(x,n), Id) along sampled orbits; verdict "bounded" when the
// running sup plateaus (trailing-half increase below plateau_frac).
BoundednessAudit boundedness_audit(const CocycleGenerator& gen, int orbit_count,
                                   std::int64_t n_max, std::uint64_t seed,
                                   std::string_view measure, double plateau_frac = 0.01,
                                   int workers = 1);

// Pseudo-return with a prescribed dyadic gap: the word is n-periodic on
// [-radius+1, n+radius-1] with mismatches injected at +-radius (when the
// transition graph permits), so dist(x, f^n x) = base^{-radius}. The actual
// distance is whatever the construction achieved; read it off the triple.
ShadowingTriple engineered_pseudo_return(const SftSystem& sft, int radius, std::int64_t n,
                                         std::int64_t margin, std::uint64_t seed);

}  // namespace cocyclelab
