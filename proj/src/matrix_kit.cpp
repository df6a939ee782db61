#include "cocyclelab/matrix_kit.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace cocyclelab {

namespace {

void require_square(const Matrix& m, const char* where) {
  if (m.rows() != m.cols() || m.rows() == 0)
    fail(ErrorCode::invalid_argument, std::string(where) + ": matrix must be square and nonempty");
  if (!m.allFinite())
    fail(ErrorCode::invalid_argument, std::string(where) + ": matrix has non-finite entries");
}

}  // namespace

double operator_norm(const Matrix& m) {
  if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

Matrix safe_inverse(const Matrix& m, double cond_cap) {
  require_square(m, "safe_inverse");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  double smax = sv(0), smin = sv(sv.size() - 1);
  if (smin <= 0.0 || smax / smin > cond_cap) {
    std::ostringstream os;
    os << "safe_inverse: condition estimate " << (smin > 0 ? smax / smin : std::numeric_limits<double>::infinity())
       << " exceeds cap " << cond_cap;
    fail(ErrorCode::singular_matrix, os.str());
  }
  return svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
}

double group_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail(ErrorCode::invalid_argument, "group_distance: dimension mismatch");
  return operator_norm(a - b) + operator_norm(safe_inverse(a) - safe_inverse(b));
}

std::vector<std::vector<int>> index_subsets(int m, int i) {
  if (i < 0 || i > m) fail(ErrorCode::invalid_argument, "index_subsets: i out of range");
  std::vector<std::vector<int>> out;
  std::vector<int> cur(i);
  // standard lexicographic enumeration
  for (int j = 0; j < i; ++j) cur[j] = j;
  if (i == 0) {
    out.push_back({});
    return out;
  }
  while (true) {
    out.push_back(cur);
    int j = i - 1;
    while (j >= 0 && cur[j] == m - i + j) --j;
    if (j < 0) break;
    ++cur[j];
    for (int t = j + 1; t < i; ++t) cur[t] = cur[t - 1] + 1;
  }
  return out;
}

Matrix compound(const Matrix& m, int i) {
  require_square(m, "compound");
  int n = static_cast<int>(m.rows());
  if (i < 1 || i > n) fail(ErrorCode::invalid_argument, "compound: order out of [1, m]");
  auto subsets = index_subsets(n, i);
  int d = static_cast<int>(subsets.size());
  Matrix out(d, d);
  Matrix minor(i, i);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      for (int a = 0; a < i; ++a)
        for (int b = 0; b < i; ++b) minor(a, b) = m(subsets[r][a], subsets[c][b]);
      out(r, c) = minor.determinant();
    }
  }
  return out;
}

Vector eigen_moduli(const Matrix& m) {
  require_square(m, "eigen_moduli");
  if (m.rows() == 1) {
    Vector v(1);
    v(0) = std::abs(m(0, 0));
    return v;
  }
  Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    fail(ErrorCode::internal, "eigen_moduli: eigensolver did not converge");
  Vector mods = es.eigenvalues().cwiseAbs();
  std::sort(mods.data(), mods.data() + mods.size());
  return mods;
}

QrFactors qr_factor(const Matrix& m) {
  require_square(m, "qr_factor");
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  double scale = m.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < r.rows(); ++j) {
    if (std::abs(r(j, j)) < 1e-14 * std::max(scale, 1e-300))
      fail(ErrorCode::singular_matrix, "qr_factor: rank-deficient input");
    if (r(j, j) < 0) {
      r.row(j) = -r.row(j);
      q.col(j) = -q.col(j);
    }
  }
  return {q, r};
}

PerturbationBoundCheck check_perturbation_bound(const Matrix& a, const Matrix& b,
                                                double m_bound, double xi) {
  PerturbationBoundCheck out;
  if (!(xi < 0.5) || m_bound < 0) return out;
  Matrix id = Matrix::Identity(a.rows(), a.cols());
  double da = group_distance(a, id);
  if (da > m_bound * (1 + 1e-12) + 1e-12) return out;
  Matrix ainv = safe_inverse(a);
  double left = operator_norm(ainv * b - id);
  double right = operator_norm(a * safe_inverse(b) - id);
  if (std::min(left, right) > xi * (1 + 1e-12) + 1e-15) return out;
  out.applicable = true;
  out.lhs = group_distance(a, b);
  out.rhs = 3.0 * (m_bound + 1.0) * xi;
  out.holds = out.lhs <= out.rhs * (1 + 1e-12) + 1e-15;
  return out;
}

ScaledMatrix::ScaledMatrix(const Matrix& m) : unit_(m) {
  require_square(m, "ScaledMatrix");
  renormalize();
}

ScaledMatrix ScaledMatrix::identity(Eigen::Index m) {
  ScaledMatrix s;
  s.unit_ = Matrix::Identity(m, m);
  s.log_scale_ = 0.0;
  return s;
}

ScaledMatrix ScaledMatrix::from_parts(const Matrix& unit, double log_scale) {
  require_square(unit, "ScaledMatrix::from_parts");
  double n = operator_norm(unit);
  if (!(n >= 0.5 && n <= 2.0))
    fail(ErrorCode::invalid_argument, "from_parts: unit norm outside [1/2, 2]");
  ScaledMatrix s;
  s.unit_ = unit;
  s.log_scale_ = log_scale;
  return s;
}

void ScaledMatrix::renormalize() {
  double n = operator_norm(unit_);
  if (!(n > 0.0) || !std::isfinite(n))
    fail(ErrorCode::singular_matrix, "ScaledMatrix: zero or non-finite norm");
  unit_ /= n;
  log_scale_ += std::log(n);
}

ScaledMatrix ScaledMatrix::operator*(const ScaledMatrix& rhs) const {
  ScaledMatrix out;
  out.unit_ = unit_ * rhs.unit_;
  out.log_scale_ = log_scale_ + rhs.log_scale_;
  out.renormalize();
  return out;
}

void ScaledMatrix::left_multiply(const Matrix& dense) {
  unit_ = dense * unit_;
  renormalize();
}

void ScaledMatrix::right_multiply(const Matrix& dense) {
  unit_ = unit_ * dense;
  renormalize();
}

ScaledMatrix ScaledMatrix::inverse() const {
  // long hyperbolic products have unit parts of condition e^{spread * n};
  // SVD inversion stays stable there, so no condition cap applies
  ScaledMatrix out;
  out.unit_ = safe_inverse(unit_, std::numeric_limits<double>::infinity());
  out.log_scale_ = -log_scale_;
  out.renormalize();
  return out;
}

Matrix ScaledMatrix::dense() const { return std::exp(log_scale_) * unit_; }

double ScaledMatrix::log_min_singular() const {
  Eigen::JacobiSVD<Matrix> svd(unit_);
  double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (!(smin > 0.0)) fail(ErrorCode::singular_matrix, "log_min_singular: singular unit part");
  return std::log(smin) + log_scale_;
}

double ScaledMatrix::log_abs_det() const {
  Eigen::PartialPivLU<Matrix> lu(unit_);
  double ld = 0.0;
  for (Eigen::Index i = 0; i < unit_.rows(); ++i) ld += std::log(std::abs(lu.matrixLU()(i, i)));
  return ld + log_scale_ * static_cast<double>(unit_.rows());
}

Vector ScaledMatrix::eigen_log_moduli() const {
  Vector mods = eigen_moduli(unit_);
  Vector out(mods.size());
  for (Eigen::Index i = 0; i < mods.size(); ++i) out(i) = std::log(mods(i)) + log_scale_;
  return out;
}

bool bit_equal(const ScaledMatrix& a, const ScaledMatrix& b) {
  if (a.dim() != b.dim()) return false;
  if (std::memcmp(&a.log_scale_, &b.log_scale_, sizeof(double)) != 0) return false;
  return std::memcmp(a.unit_.data(), b.unit_.data(),
                     sizeof(double) * a.unit_.size()) == 0;
}

double relative_difference(const ScaledMatrix& a, const ScaledMatrix& b) {
  if (bit_equal(a, b)) return 0.0;
  double ds = b.log_scale() - a.log_scale();
  if (ds > 700.0) return std::numeric_limits<double>::infinity();
  // ‖a − b‖ / ‖a‖ = ‖unit_a − e^{sb−sa} unit_b‖ since ‖unit_a‖ = 1.
  return operator_norm(a.unit() - std::exp(ds) * b.unit());
}

double distance_from_identity(const ScaledMatrix& m) {
  if (m.log_scale() > 700.0) return std::numeric_limits<double>::infinity();
  return operator_norm(m.dense() - Matrix::Identity(m.dim(), m.dim()));
}

double log_group_distance_from_identity(const ScaledMatrix& m, const ScaledMatrix& m_inv) {
  auto log_dist = [](const ScaledMatrix& s) {
    if (s.log_scale() < 550.0 && s.log_scale() > -550.0)
      return std::log(std::max(distance_from_identity(s), 1e-300));
    if (s.log_scale() >= 550.0) return s.log_scale();  // ‖s − Id‖ ≈ ‖s‖
    return 0.0;  // ‖s − Id‖ ≈ 1 when s is negligible
  };
  double a = log_dist(m), b = log_dist(m_inv);
  double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace cocyclelab
