#include <doctest.h>

#include <cmath>

#include "cocyclelab/matrix_kit.hpp"

using namespace cocyclelab;

namespace {

Matrix random_matrix(int m, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = scale * normal(rng);
  return a;
}

Matrix random_invertible(int m, Rng& rng) {
  for (;;) {
    Matrix a = random_matrix(m, rng);
    Eigen::JacobiSVD<Matrix> svd(a);
    if (svd.singularValues()(m - 1) > 0.05) return a;
  }
}

constexpr double kGolden = 2.6180339887498949;  // (3 + sqrt 5) / 2

}  // namespace

TEST_CASE("operator norm basics") {
  CHECK(operator_norm(Matrix::Identity(3, 3)) == doctest::Approx(1.0).epsilon(1e-14));
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 3.0;
  d(1, 1) = 0.5;
  CHECK(operator_norm(d) == doctest::Approx(3.0).epsilon(1e-14));
  Matrix l(2, 2);
  l << 2, 1, 1, 1;
  CHECK(operator_norm(l) == doctest::Approx(kGolden).epsilon(1e-12));
}

TEST_CASE("group distance formula and symmetry") {
  Matrix a(1, 1), b(1, 1);
  a << 2.0;
  b << 1.0;
  CHECK(group_distance(a, b) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(group_distance(a, a) == 0.0);

  Rng rng = make_rng(7);
  for (int t = 0; t < 200; ++t) {
    Matrix x = random_invertible(3, rng), y = random_invertible(3, rng);
    CHECK(group_distance(x, y) == doctest::Approx(group_distance(y, x)).epsilon(1e-12));
  }
}

TEST_CASE("group distance triangle inequality") {
  Rng rng = make_rng(11);
  for (int t = 0; t < 10000; ++t) {
    int m = 1 + static_cast<int>(t % 3);
    Matrix a = random_invertible(m, rng), b = random_invertible(m, rng),
           c = random_invertible(m, rng);
    double ab = group_distance(a, b), bc = group_distance(b, c), ac = group_distance(a, c);
    CHECK(ac <= ab + bc + 1e-10 * (1 + ab + bc));
  }
}

TEST_CASE("compound matrices: examples") {
  CHECK((compound(Matrix::Identity(4, 4), 2) -
         Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
  Matrix d = Matrix::Zero(3, 3);
  d(0, 0) = 1;
  d(1, 1) = 2;
  d(2, 2) = 3;
  Matrix c2 = compound(d, 2);
  Matrix want = Matrix::Zero(3, 3);
  want(0, 0) = 2;   // {0,1}
  want(1, 1) = 3;   // {0,2}
  want(2, 2) = 6;   // {1,2}
  CHECK((c2 - want).cwiseAbs().maxCoeff() < 1e-14);
  Matrix c3 = compound(d, 3);
  CHECK(c3.rows() == 1);
  CHECK(c3(0, 0) == doctest::Approx(6.0).epsilon(1e-14));
  CHECK_THROWS_AS(compound(d, 4), Error);
}

TEST_CASE("compound multiplicativity") {
  Rng rng = make_rng(13);
  for (int t = 0; t < 1000; ++t) {
    int m = 2 + static_cast<int>(t % 4);  // up to 5
    Matrix a = random_matrix(m, rng), b = random_matrix(m, rng);
    for (int i = 1; i <= m; ++i) {
      Matrix lhs = compound(a * b, i);
      Matrix rhs = compound(a, i) * compound(b, i);
      double scale = std::max(1.0, lhs.cwiseAbs().maxCoeff());
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() / scale < 1e-9);
    }
  }
}

TEST_CASE("eigen moduli examples") {
  double theta = 0.7;
  Matrix rot(2, 2);
  rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  Vector mods = eigen_moduli(rot);
  CHECK(mods(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mods(1) == doctest::Approx(1.0).epsilon(1e-12));

  Matrix l(2, 2);
  l << 2, 1, 1, 1;
  mods = eigen_moduli(l);
  CHECK(mods(0) == doctest::Approx(3.0 - kGolden).epsilon(1e-12));
  CHECK(mods(1) == doctest::Approx(kGolden).epsilon(1e-12));

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = -2;
  d(1, 1) = 3;
  mods = eigen_moduli(d);
  CHECK(mods(0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(mods(1) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("eigen moduli product equals |det|") {
  Rng rng = make_rng(17);
  for (int t = 0; t < 500; ++t) {
    int m = 2 + static_cast<int>(t % 3);
    Matrix a = random_invertible(m, rng);
    Vector mods = eigen_moduli(a);
    double prod = 1.0;
    for (Eigen::Index i = 0; i < mods.size(); ++i) prod *= mods(i);
    CHECK(prod == doctest::Approx(std::abs(a.determinant())).epsilon(1e-9));
  }
}

TEST_CASE("compound spectra are subset products") {
  Rng rng = make_rng(19);
  for (int t = 0; t < 100; ++t) {
    int m = 2 + static_cast<int>(t % 3);  // up to 4
    Matrix a = random_invertible(m, rng);
    Vector mods = eigen_moduli(a);
    for (int i = 1; i <= m; ++i) {
      Vector cm = eigen_moduli(compound(a, i));
      std::vector<double> expected;
      for (const auto& subset : index_subsets(m, i)) {
        double p = 1.0;
        for (int idx : subset) p *= mods(idx);
        expected.push_back(p);
      }
      std::sort(expected.begin(), expected.end());
      REQUIRE(cm.size() == static_cast<Eigen::Index>(expected.size()));
      for (Eigen::Index j = 0; j < cm.size(); ++j)
        CHECK(cm(j) == doctest::Approx(expected[static_cast<std::size_t>(j)])
                           .epsilon(1e-8)
                           .scale(1.0 + expected.back()));
    }
  }
}

TEST_CASE("qr factorization") {
  Rng rng = make_rng(23);
  double theta = 1.1;
  Matrix rot(2, 2);
  rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  QrFactors f = qr_factor(rot);
  CHECK((f.r - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((f.q - rot).cwiseAbs().maxCoeff() < 1e-12);

  Matrix up(3, 3);
  up << 2, 1, -1, 0, 0.5, 3, 0, 0, 1.5;
  f = qr_factor(up);
  CHECK((f.q - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((f.r - up).cwiseAbs().maxCoeff() < 1e-12);

  for (int t = 0; t < 200; ++t) {
    Matrix a = random_invertible(3, rng);
    f = qr_factor(a);
    CHECK(operator_norm(f.q * f.r - a) <= 1e-12 * operator_norm(a));
    CHECK(operator_norm(f.q.transpose() * f.q - Matrix::Identity(3, 3)) < 1e-12);
    for (int i = 0; i < 3; ++i) CHECK(f.r(i, i) > 0.0);
  }
  CHECK_THROWS_AS(qr_factor(Matrix::Zero(2, 2)), Error);
}

TEST_CASE("scaled matrices survive long products") {
  Rng rng = make_rng(29);
  // against a dense product while it still fits in a double
  ScaledMatrix acc = ScaledMatrix::identity(3);
  Matrix dense = Matrix::Identity(3, 3);
  int n = 150;
  for (int t = 0; t < n; ++t) {
    Matrix a = random_invertible(3, rng) * 10.0;
    acc.left_multiply(a);
    dense = a * dense;
  }
  CHECK(std::abs(acc.log_norm() - std::log(operator_norm(dense))) < 1e-8 * n);

  // 10^4 factors of norm ~10 would overflow any dense representation
  for (int t = 0; t < 10000 - n; ++t) acc.left_multiply(random_invertible(3, rng) * 10.0);
  CHECK(std::isfinite(acc.log_norm()));
  CHECK(acc.unit().allFinite());
  CHECK(operator_norm(acc.unit()) == doctest::Approx(1.0).epsilon(1e-12));

  // inverse roundtrip on a product short enough to stay well conditioned
  ScaledMatrix short_acc = ScaledMatrix::identity(3);
  for (int t = 0; t < 10; ++t) short_acc.left_multiply(random_invertible(3, rng) * 10.0);
  CHECK(distance_from_identity(short_acc * short_acc.inverse()) < 1e-10);
}

TEST_CASE("scaled matrix bit equality and relative difference") {
  Matrix a(2, 2);
  a << 1.5, 0.25, -0.75, 2.0;
  ScaledMatrix s1(a), s2(a);
  CHECK(bit_equal(s1, s2));
  CHECK(relative_difference(s1, s2) == 0.0);
  Matrix b = a;
  b(0, 0) += 1e-13;
  CHECK(relative_difference(s1, ScaledMatrix(b)) > 0.0);
  CHECK(relative_difference(s1, ScaledMatrix(b)) < 1e-12);
}

TEST_CASE("perturbation bound: examples") {
  Matrix a(1, 1), b(1, 1);
  a << 1.0;
  b << 1.1;
  auto chk = check_perturbation_bound(a, b, 0.0, 0.1);
  CHECK(chk.applicable);
  CHECK(chk.holds);
  CHECK(chk.lhs == doctest::Approx(0.1 + (1.0 - 1.0 / 1.1)).epsilon(1e-12));
  CHECK(chk.rhs == doctest::Approx(0.3).epsilon(1e-14));

  auto same = check_perturbation_bound(a, a, 0.0, 0.1);
  CHECK(same.applicable);
  CHECK(same.lhs == 0.0);

  // xi >= 1/2 is outside the lemma's hypotheses: not applicable, not a failure
  CHECK_FALSE(check_perturbation_bound(a, b, 0.0, 0.5).applicable);
}

TEST_CASE("perturbation bound: random sweep has no violations") {
  Rng rng = make_rng(31);
  std::uniform_real_distribution<double> xi_dist(0.005, 0.49);
  int applicable = 0;
  for (int t = 0; t < 10000; ++t) {
    int m = 1 + static_cast<int>(t % 3);
    Matrix log_a = random_matrix(m, rng, 0.3);
    Matrix a = Matrix::Identity(m, m) + log_a;  // generic invertible near-ish Id
    if (std::abs(a.determinant()) < 0.05) continue;
    double xi = xi_dist(rng);
    Matrix e = random_matrix(m, rng);
    e *= xi / operator_norm(e);
    Matrix b = a * (Matrix::Identity(m, m) + e);
    double m_bound = group_distance(a, Matrix::Identity(m, m));
    auto chk = check_perturbation_bound(a, b, m_bound, xi);
    if (!chk.applicable) continue;
    ++applicable;
    CHECK(chk.holds);
  }
  CHECK(applicable > 9000);
}
