#pragma once

#include <optional>
#include <vector>

#include "cocyclelab/cocycle.hpp"

namespace cocyclelab {

struct SpectrumDiagnostics {
  double tail_slope = 0.0;    // max |d chi / dn| over the last decade, per step
  bool converged = false;     // tail_slope < 1e-4
  double det_residual = 0.0;  // |sum of exponents - n^{-1} log|det|| worst case
};

struct LyapunovSpectrum {
  Vector exponents;  // ascending, with multiplicity
  std::int64_t steps = 0;
  SpectrumDiagnostics diag;
  std::vector<std::pair<std::int64_t, Vector>> trace;  // decimated running exponents
};

// Exponents from QR accumulation along the orbit (re-orthonormalized every
// step). The orbit must hold consecutive points x, fx, ...
LyapunovSpectrum spectrum_qr(const CocycleGenerator& gen, const std::vector<Point>& orbit);

// Exponents recovered from the top growth rates of the exterior-power
// cocycles: the i-th compound's top exponent is the sum of the i largest.
LyapunovSpectrum spectrum_via_compounds(const CocycleGenerator& gen,
                                        const std::vector<Point>& orbit);

// Exact exponents at a periodic point: (1/n) log eigenvalue moduli of the
// period product.
LyapunovSpectrum periodic_spectrum(const CocycleGenerator& gen, const Point& p, std::int64_t n);

struct OseledetsSplittingEstimate {
  Point base;
  int window = 0;
  std::vector<double> exponents;  // per block, ascending
  std::vector<int> multiplicities;
  std::vector<Matrix> bases;  // orthonormal m x m_i per block
  double noise_level = 0.0;
  bool merged = false;              // nearby exponents were merged into one block
  double intersection_quality = 0.0;  // max (1 - principal cosine)
  double invariance_angle = 0.0;      // max angle(A(x) E_i(x), E_i(fx)), radians
};

// Finite-window estimate of the Oseledets splitting: intersect the slow
// forward singular filtration with the slow backward one. The point needs a
// defined orbit on [-window-1, window+1].
OseledetsSplittingEstimate oseledets_splitting(const CocycleGenerator& gen, const Point& x,
                                               int window);

struct LyapunovInnerResult {
  double value = 0.0;
  double tail_bound = 0.0;
  bool cross_subspace = false;  // inputs in distinct blocks: value is 0 by convention
};

// Truncated epsilon-Lyapunov scalar product
//   m * sum_{|n|<=N} <A(x,n)u, A(x,n)v> exp(-2 chi_i n - eps |n|).
LyapunovInnerResult lyapunov_inner(const CocycleGenerator& gen,
                                   const OseledetsSplittingEstimate& split, const Vector& u,
                                   const Vector& v, double epsilon, int truncation);

// Gram matrix G with <u, v>_{x, eps} = u^T G v for the truncated metric.
struct LyapunovGram {
  Matrix gram;
  double tail_rel = 0.0;  // relative size of the dropped tail
};
LyapunovGram lyapunov_gram(const CocycleGenerator& gen, const OseledetsSplittingEstimate& split,
                           double epsilon, int truncation);

struct RegularityEstimate {
  double k_eps = 1.0;       // sup of Lyapunov norm over the Euclidean unit sphere
  double lambda_min = 1.0;  // inf of the same ratio squared (>= 1 up to tail)
  double tail_rel = 0.0;
  double epsilon = 0.0;
  int truncation = 0;
  int metric_m_factor = 0;  // the constant m kept in front of the sum
};
RegularityEstimate regularity_constant(const CocycleGenerator& gen,
                                       const OseledetsSplittingEstimate& split, double epsilon,
                                       int truncation);

struct InequalityMargins {
  double min_margin = 0.0;  // log-scale; negative below -allowance means failure
  bool pass = true;
};

struct LyapunovInequalityReport {
  InequalityMargins block_growth_upper;  // ||A(x,n)u||_{f^n x} <= e^{n chi_i + eps|n|} ||u||_x
  InequalityMargins block_growth_lower;
  InequalityMargins top_norm_upper;  // e^{n(chi-eps)} <= ||A(x,n)||_{f^n x <- x} <= e^{n(chi+eps)}
  InequalityMargins top_norm_lower;
  InequalityMargins norm_comparison;  // K(x)^{-1}||A|| <= ||A||_{y<-x} <= K(y)||A||
  InequalityMargins k_drift;          // K(f^n x) within K(x) e^{eps|n|}
  double allowance = 0.0;             // truncation + estimation slack subtracted before judging
  bool pass = true;
};

LyapunovInequalityReport verify_lyapunov_inequalities(const CocycleGenerator& gen, const Point& x,
                                                      double epsilon, int truncation, int n_max,
                                                      int window, std::uint64_t seed);

}  // namespace cocyclelab
