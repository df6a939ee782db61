#pragma once

#include <memory>
#include <string>

#include "cocyclelab/rigidity.hpp"

namespace cocyclelab {

struct TransferLookup;  // nearest-net-point index (word hash / cell grid)

struct TransferFunction {
  CocycleGenerator generator;
  DenseOrbitNet net;
  std::vector<ScaledMatrix> values;  // one per net point, C(f^k z) = A(z, k)
  double sup_group_dist_id = 0.0;
  HolderEstimate holder;  // regression over net pairs
  std::shared_ptr<const TransferLookup> lookup;
};

struct TransferGate {
  int max_period = 12;
  double tol = 1e-6;
};

// Tabulates C(f^k z) = A(z, k) along the net orbit. Refuses (precondition
// error, audit summary in the message) unless the periodic-data audit over
// gate.max_period comes back trivial.
TransferFunction build_transfer(const CocycleGenerator& gen, const DenseOrbitNet& net,
                                const TransferGate& gate = {});

struct TransferEval {
  Matrix value;
  double error_bound = 0.0;  // c_hat * mesh^alpha
  std::int64_t net_index = -1;
  double dist = 0.0;
};

// Value at the nearest net point (ties broken by smallest orbit index).
TransferEval evaluate_transfer(const TransferFunction& tf, const Point& x);

struct CoboundaryResidualReport {
  double max_residual = 0.0;
  double mean_residual = 0.0;
  int samples = 0;
  double bound_used = 0.0;  // Hölder-based pass threshold
  bool pass = false;
};

// Residual ||A(x) - C(fx) C(x)^{-1}|| over sampled x.
CoboundaryResidualReport verify_coboundary(const CocycleGenerator& gen, const TransferFunction& tf,
                                           int samples, std::uint64_t seed);

// Log-log regression of d_G(C(u), C(v)) against dist(u, v) over close net pairs.
HolderEstimate holder_estimate_transfer(const TransferFunction& tf);

struct UniquenessReport {
  Matrix b_estimate;
  double max_deviation = 0.0;
  double tol = 0.0;
  bool pass = false;
};

// Any two transfer functions of the same generator differ by a constant
// right factor B; estimates B and the worst deviation from it.
UniquenessReport uniqueness_check(const TransferFunction& c1, const TransferFunction& c2);

struct SubgroupReport {
  int violations = 0;
  double max_defect = 0.0;
  double generator_defect = 0.0;  // worst predicate defect of A over the net
  bool applicable = false;        // generator itself satisfies the predicate
};

// predicate in {special-linear, orthogonal, symplectic}; checks that the net
// values stay in the subgroup up to accumulated roundoff when A does.
SubgroupReport subgroup_check(const TransferFunction& tf, std::string_view predicate);

// Binary-free JSON + CSV bundle; reload reproduces residuals bit-identically.
void save_transfer(const TransferFunction& tf, const std::string& json_path,
                   const std::string& csv_path);
TransferFunction load_transfer(const CocycleGenerator& gen, const std::string& json_path,
                               const std::string& csv_path);

}  // namespace cocyclelab
