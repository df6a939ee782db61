#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "cocyclelab/base_systems.hpp"
#include "cocyclelab/matrix_kit.hpp"

namespace cocyclelab {

enum class PeriodicDataClass { unknown, trivial, bounded, general };

std::string to_string(PeriodicDataClass c);

// A Hölder map X -> GL(m, R), used both as a cocycle generator core and as a
// ground-truth conjugacy/transfer function.
struct MatrixField {
  int m = 0;
  double alpha = 1.0;
  std::int64_t radius = 0;  // symbolic dependence radius (0 for toral/constant)
  std::function<Matrix(const Point&)> eval;
};

struct CocycleValue {
  ScaledMatrix value;
  Point base;
  std::int64_t steps = 0;
};

struct HolderEstimate {
  double alpha_hat = 0.0;
  double c_hat = 0.0;
  double alpha_stderr = 0.0;
  bool flat = false;              // numerator identically ~0
  bool locally_constant = false;  // differences vanish below some scale
  bool narrow = false;            // too few distinct scales for a slope
  double smallest_active_scale = 0.0;
  int pairs_used = 0;
};

class CocycleGenerator {
 public:
  CocycleGenerator() = default;

  int dim() const;
  double holder_alpha() const;
  std::int64_t dependence_radius() const;
  const System& system() const;
  const std::shared_ptr<const System>& system_ptr() const;
  const std::string& kind() const;

  Matrix evaluate(const Point& x) const;
  Matrix evaluate_inverse(const Point& x) const;

  // A(f^{n-1}x) ... A(fx) A(x) for n > 0; inverse of the product at f^{-n}x
  // for n < 0; identity for n = 0. Scaled so arbitrary n never overflows.
  CocycleValue product(const Point& x, std::int64_t n) const;

  PeriodicDataClass declared_class() const;
  bool has_true_transfer() const;
  Matrix true_transfer(const Point& x) const;
  std::optional<std::pair<double, double>> true_exponent_bounds() const;

  struct Impl;
  explicit CocycleGenerator(std::shared_ptr<const Impl> impl);
  // Identity of the underlying instance (transfer functions of the "same
  // generator" share it).
  const void* instance_id() const { return impl_.get(); }

 private:
  std::shared_ptr<const Impl> impl_;
};

inline bool same_generator(const CocycleGenerator& a, const CocycleGenerator& b) {
  return a.instance_id() == b.instance_id();
}

// --- constructor families -------------------------------------------------

CocycleGenerator make_constant(std::shared_ptr<const System> sys, const Matrix& m);
// Locally constant with radius 0: A(x) = table[x_0].
CocycleGenerator make_symbol_table(std::shared_ptr<const System> sys,
                                   const std::vector<Matrix>& table);
// exp of a truncated symbol series with geometric weights: genuinely
// alpha-Hölder with dependence radius chosen from the truncation tolerance.
CocycleGenerator make_holder_series(std::shared_ptr<const System> sys, int m, double alpha,
                                    double amplitude, std::uint64_t seed);
// exp of a trigonometric polynomial of the toral coordinates (alpha = 1).
CocycleGenerator make_toral_smooth(std::shared_ptr<const System> sys, int m, double amplitude,
                                   std::uint64_t seed, int frequencies = 3);
// A(x) = C(fx) C(x)^{-1}; keeps C as ground truth.
CocycleGenerator make_coboundary(std::shared_ptr<const System> sys, MatrixField c_true);
// A(x) = C(fx) R(x) C(x)^{-1} with rotation-valued R: bounded periodic data.
CocycleGenerator make_conjugated_orthogonal(std::shared_ptr<const System> sys, int m,
                                            double alpha, double c_amplitude,
                                            double r_amplitude, std::uint64_t seed);
// A(x) = C(fx) U(x) C(x)^{-1} with unit-triangular U: all exponents zero but
// nontrivial periodic data.
CocycleGenerator make_conjugated_unipotent(std::shared_ptr<const System> sys, int m,
                                           double alpha, double c_amplitude,
                                           double u_amplitude, std::uint64_t seed);
// Derivative cocycle of a toral automorphism (constant L).
CocycleGenerator make_derivative(std::shared_ptr<const System> sys);

struct FamilyParams {
  int m = 2;
  double alpha = 0.6;
  double amplitude = 0.35;
  double conjugacy_amplitude = 0.4;
  std::uint64_t seed = 1;
  int frequencies = 3;
};
// kinds: constant-identity, coboundary, conjugated-orthogonal,
// conjugated-unipotent, random-holder, derivative, symbol-table-demo
CocycleGenerator make_family(std::shared_ptr<const System> sys, const std::string& kind,
                             const FamilyParams& params);

// Arbitrary evaluation closure; mainly for tests and derived cocycles.
CocycleGenerator make_custom(std::shared_ptr<const System> sys, int m, double alpha,
                             std::int64_t radius, std::function<Matrix(const Point&)> eval,
                             const std::string& kind = "custom");

// Ground-truth Hölder fields, exposed for transfer-function tests.
MatrixField make_series_field(std::shared_ptr<const System> sys, int m, double alpha,
                              double amplitude, std::uint64_t seed);
MatrixField make_toral_trig_field(std::shared_ptr<const System> sys, int m, double amplitude,
                                  std::uint64_t seed, int frequencies = 3);
MatrixField make_constant_field(int m, const Matrix& value);

// Relative residual of A(x, n+k) = A(f^k x, n) A(x, k); exact zero when one
// side is a bitwise replay of the other (n = 0 or k = 0).
double verify_cocycle_identity(const CocycleGenerator& gen, const Point& x, std::int64_t n,
                               std::int64_t k);

// Log-log regression of ||A(x) - A(y)|| against dist(x, y) over sampled
// close pairs.
HolderEstimate estimate_holder(const CocycleGenerator& gen, int pair_count, std::uint64_t seed);

}  // namespace cocyclelab
