#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cocyclelab/common.hpp"

namespace cocyclelab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Spectral norm (largest singular value).
double operator_norm(const Matrix& m);

// Inverse with a condition-number cap; throws singular_matrix beyond the cap.
Matrix safe_inverse(const Matrix& m, double cond_cap = 1e12);

// ‖A − B‖ + ‖A⁻¹ − B⁻¹‖ in the spectral norm.
double group_distance(const Matrix& a, const Matrix& b);

// Lexicographically ordered i-element subsets of {0, …, m−1}.
std::vector<std::vector<int>> index_subsets(int m, int i);

// i-th compound matrix: entries are the i×i minors, rows/columns indexed by
// lexicographic subsets. Multiplicative: compound(AB, i) = compound(A, i) * compound(B, i).
Matrix compound(const Matrix& m, int i);

// Moduli of the eigenvalues, ascending, listed with multiplicity.
Vector eigen_moduli(const Matrix& m);

struct QrFactors {
  Matrix q;  // orthogonal
  Matrix r;  // upper triangular, positive diagonal
};
QrFactors qr_factor(const Matrix& m);

struct PerturbationBoundCheck {
  bool applicable = false;  // preconditions (norm bound, xi < 1/2) satisfied
  bool holds = false;
  double lhs = 0.0;  // d_G(A, B)
  double rhs = 0.0;  // 3 (M + 1) xi
};
// Checks d_G(A,B) <= 3(M+1)xi given d_G(A,Id) <= M and a multiplicative
// perturbation of size xi < 1/2 on either side.
PerturbationBoundCheck check_perturbation_bound(const Matrix& a, const Matrix& b,
                                                double m_bound, double xi);

// An invertible matrix kept as exp(log_scale) * unit with ‖unit‖ = 1, so that
// products over 10^5-step orbits never overflow.
class ScaledMatrix {
 public:
  ScaledMatrix() = default;
  explicit ScaledMatrix(const Matrix& m);
  static ScaledMatrix identity(Eigen::Index m);
  // Reassembles a previously serialized (unit, log_scale) pair verbatim; the
  // unit part must already have operator norm in [1/2, 2].
  static ScaledMatrix from_parts(const Matrix& unit, double log_scale);

  const Matrix& unit() const { return unit_; }
  double log_scale() const { return log_scale_; }
  Eigen::Index dim() const { return unit_.rows(); }

  ScaledMatrix operator*(const ScaledMatrix& rhs) const;
  // this <- dense * this, with a single renormalization.
  void left_multiply(const Matrix& dense);
  // this <- this * dense
  void right_multiply(const Matrix& dense);
  ScaledMatrix inverse() const;

  // exp(log_scale) * unit; overflows for |log_scale| beyond double range.
  Matrix dense() const;
  double log_norm() const { return log_scale_; }
  // log of the smallest singular value (scale included); -log of this is the
  // log norm of the inverse.
  double log_min_singular() const;
  double log_abs_det() const;
  // log of eigenvalue moduli, ascending, scale included.
  Vector eigen_log_moduli() const;

  friend bool bit_equal(const ScaledMatrix& a, const ScaledMatrix& b);

 private:
  Matrix unit_;
  double log_scale_ = 0.0;
  void renormalize();
};

// ‖a − b‖ / ‖a‖ without leaving the scaled representation.
double relative_difference(const ScaledMatrix& a, const ScaledMatrix& b);

// ‖m − Id‖ for a scaled matrix, valid for any scale (returns +inf when the
// value is too large to represent).
double distance_from_identity(const ScaledMatrix& m);

// log(‖m − Id‖ + ‖m⁻¹ − Id‖), finite even when the norms overflow a double.
double log_group_distance_from_identity(const ScaledMatrix& m, const ScaledMatrix& m_inv);

}  // namespace cocyclelab
