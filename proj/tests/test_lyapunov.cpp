#include <doctest.h>

#include <cmath>

#include "cocyclelab/lyapunov.hpp"

using namespace cocyclelab;

namespace {

constexpr double kCatExponent = 0.96242365011920694;  // log((3 + sqrt 5) / 2)

Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

Matrix diag3(double a, double b, double c) {
  Matrix m = Matrix::Zero(3, 3);
  m(0, 0) = a;
  m(1, 1) = b;
  m(2, 2) = c;
  return m;
}

}  // namespace

TEST_CASE("qr spectrum: constant diagonal cocycle is exact") {
  auto shift = make_full_shift(2);
  auto gen = make_constant(shift, diag2(2.0, 0.5));
  auto orbit = shift->sample_orbit("max-entropy", 400, 1);
  LyapunovSpectrum s = spectrum_qr(gen, orbit);
  CHECK(s.exponents(0) == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
  CHECK(s.exponents(1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(s.diag.det_residual < 1e-10);
}

TEST_CASE("qr spectrum: cat-map derivative over a Lebesgue orbit") {
  auto cat = make_cat_map();
  auto gen = make_derivative(cat);
  auto orbit = cat->sample_orbit("lebesgue", 20000, 7);
  LyapunovSpectrum s = spectrum_qr(gen, orbit);
  CHECK(std::abs(s.exponents(0) + kCatExponent) < 1e-3);
  CHECK(std::abs(s.exponents(1) - kCatExponent) < 1e-3);
  CHECK(s.diag.converged);
  CHECK(s.diag.det_residual < 1e-6);
}

TEST_CASE("qr spectrum: coboundary exponents vanish") {
  auto shift = make_full_shift(2);
  FamilyParams p;
  p.m = 2;
  p.alpha = 0.7;
  p.conjugacy_amplitude = 0.5;
  p.seed = 4;
  auto gen = make_family(shift, "coboundary", p);
  auto orbit = shift->sample_orbit("max-entropy", 20000, 5, gen.dependence_radius() + 2);
  LyapunovSpectrum s = spectrum_qr(gen, orbit);
  CHECK(s.exponents.cwiseAbs().maxCoeff() < 1e-2);
}

TEST_CASE("compound spectrum: constant diagonal examples") {
  auto shift = make_full_shift(2);
  auto gen = make_constant(shift, diag3(1.0, 2.0, 4.0));
  auto orbit = shift->sample_orbit("max-entropy", 4000, 2);
  LyapunovSpectrum s = spectrum_via_compounds(gen, orbit);
  CHECK(std::abs(s.exponents(0) - 0.0) < 5e-3);
  CHECK(std::abs(s.exponents(1) - std::log(2.0)) < 5e-3);
  CHECK(std::abs(s.exponents(2) - std::log(4.0)) < 5e-3);
  // top of the full compound is the determinant rate, captured exactly
  CHECK(s.diag.det_residual < 1e-10);
}

TEST_CASE("qr and compound routes agree on a random cocycle") {
  auto shift = make_full_shift(2);
  auto gen = make_holder_series(shift, 4, 0.6, 0.3, 12);
  auto orbit = shift->sample_orbit("max-entropy", 20000, 3, gen.dependence_radius() + 2);
  LyapunovSpectrum qr = spectrum_qr(gen, orbit);
  LyapunovSpectrum cm = spectrum_via_compounds(gen, orbit);
  CHECK((qr.exponents - cm.exponents).cwiseAbs().maxCoeff() < 5e-3);
}

TEST_CASE("inverse cocycle over the inverse map has negated reversed spectrum") {
  auto shift = make_full_shift(2);
  auto gen = make_holder_series(shift, 3, 0.6, 0.35, 15);
  std::int64_t len = 20000;
  auto orbit = shift->sample_orbit("max-entropy", len, 6, gen.dependence_radius() + 2);
  LyapunovSpectrum fwd = spectrum_qr(gen, orbit);

  // generator of the inverse cocycle over f^{-1}: B(x) = A(f^{-1} x)^{-1}
  auto inv_gen = make_custom(
      shift, 3, 0.6, gen.dependence_radius() + 1,
      [gen, shift](const Point& x) { return gen.evaluate_inverse(shift->step(x, -1)); },
      "inverse-of-holder");
  // orbit of f^{-1} started at the far end of the same sample
  std::vector<Point> rev;
  Point cur = orbit.back();
  for (std::int64_t i = 0; i < len; ++i) {
    rev.push_back(cur);
    cur = shift->step(cur, -1);
  }
  LyapunovSpectrum bwd = spectrum_qr(inv_gen, rev);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(bwd.exponents(i) + fwd.exponents(2 - i)) < 1e-3);
}

TEST_CASE("periodic spectrum: exact values and cyclic invariance") {
  auto shift = make_full_shift(2);
  FamilyParams p;
  p.m = 2;
  p.seed = 5;
  auto cob = make_family(shift, "coboundary", p);
  Point word(SymbolicPoint::periodic({1, 0, 0, 1, 1}));
  LyapunovSpectrum s = periodic_spectrum(cob, word, 5);
  CHECK(s.exponents.cwiseAbs().maxCoeff() < 1e-10);

  auto cat = make_cat_map();
  auto deriv = make_derivative(cat);
  RationalCoords rc;
  rc.num = {0, 0};
  rc.den = 1;
  LyapunovSpectrum fixed = periodic_spectrum(deriv, Point(ToralPoint(rc)), 1);
  CHECK(fixed.exponents(0) == doctest::Approx(-kCatExponent).epsilon(1e-12));
  CHECK(fixed.exponents(1) == doctest::Approx(kCatExponent).epsilon(1e-12));

  auto holder = make_holder_series(shift, 2, 0.6, 0.4, 19);
  Point p6(SymbolicPoint::periodic({1, 0, 0, 1, 0, 1}));
  LyapunovSpectrum base = periodic_spectrum(holder, p6, 6);
  for (int j = 1; j < 6; ++j) {
    LyapunovSpectrum rot = periodic_spectrum(holder, shift->step(p6, j), 6);
    CHECK((rot.exponents - base.exponents).cwiseAbs().maxCoeff() < 1e-9);
  }

  // non-periodic input is rejected
  auto pt = shift->sample_points("max-entropy", 1, 8, 77, holder.dependence_radius() + 12)[0];
  CHECK_THROWS_AS(periodic_spectrum(holder, pt, 5), Error);
}

TEST_CASE("oseledets splitting: constant diagonalizable and cat map") {
  auto shift = make_full_shift(2);
  auto gen = make_constant(shift, diag2(2.0, 0.5));
  auto pt = shift->sample_points("max-entropy", 1, 40, 1, 48)[0];
  OseledetsSplittingEstimate split = oseledets_splitting(gen, pt, 30);
  REQUIRE(split.exponents.size() == 2);
  CHECK(std::abs(split.exponents[0] + std::log(2.0)) < 1e-9);
  CHECK(std::abs(split.exponents[1] - std::log(2.0)) < 1e-9);
  // eigenspaces are the coordinate axes
  CHECK(std::abs(std::abs(split.bases[0](1, 0)) - 1.0) < 1e-9);
  CHECK(std::abs(std::abs(split.bases[1](0, 0)) - 1.0) < 1e-9);
  CHECK(split.invariance_angle < 1e-8);

  auto cat = make_cat_map();
  auto deriv = make_derivative(cat);
  auto tp = cat->sample_points("lebesgue", 1, 40, 3)[0];
  OseledetsSplittingEstimate cs = oseledets_splitting(deriv, tp, 30);
  Eigen::EigenSolver<Matrix> es(Matrix(deriv.evaluate(tp)));
  // compare against the true eigenvectors of L
  for (std::size_t b = 0; b < 2; ++b) {
    double lam = std::exp(cs.exponents[b]);
    Eigen::Index which = std::abs(es.eigenvalues()(0).real() - lam) <
                                 std::abs(es.eigenvalues()(1).real() - lam)
                             ? 0
                             : 1;
    Vector truth = es.eigenvectors().col(which).real();
    truth /= truth.norm();
    double cosang = std::abs(truth.dot(cs.bases[b].col(0)));
    CHECK(std::acos(std::min(1.0, cosang)) < 1e-6);
  }
}

TEST_CASE("oseledets splitting: merged block and unresolvable gap") {
  auto shift = make_full_shift(2);
  FamilyParams p;
  p.m = 2;
  p.seed = 6;
  auto cob = make_family(shift, "coboundary", p);
  auto pt = shift->sample_points("max-entropy", 1, 40, 2, cob.dependence_radius() + 48)[0];
  OseledetsSplittingEstimate split = oseledets_splitting(cob, pt, 30);
  CHECK(split.multiplicities.size() == 1);
  CHECK(split.multiplicities[0] == 2);
  CHECK(split.bases[0].cols() == 2);

  // gap 0.3 at window 30 sits between the merge band and resolvability
  auto close_gap = make_constant(shift, diag2(1.0, std::exp(0.3)));
  CHECK_THROWS_AS(oseledets_splitting(close_gap, pt, 30), Error);
}

TEST_CASE("lyapunov inner product: closed forms") {
  auto shift = make_full_shift(2);
  double eps = 0.1;
  int trunc = 200;

  // m = 1 identity cocycle: value = ||u||^2 sum e^{-eps|n|}
  Matrix one(1, 1);
  one << 1.0;
  auto id1 = make_constant(shift, one);
  auto pt = shift->sample_points("max-entropy", 1, trunc + 40, 4, trunc + 40)[0];
  OseledetsSplittingEstimate s1 = oseledets_splitting(id1, pt, 30);
  Vector u(1);
  u << 2.0;
  auto inner = lyapunov_inner(id1, s1, u, u, eps, trunc);
  double geom = 1.0;
  for (int n = 1; n <= trunc; ++n) geom += 2.0 * std::exp(-eps * n);
  CHECK(inner.value == doctest::Approx(4.0 * geom).epsilon(1e-10));
  CHECK_FALSE(inner.cross_subspace);

  // constant diag(2, 1/2): the weights cancel the growth exactly along the
  // expanding direction (ascending blocks, so index 1 expands)
  auto gen = make_constant(shift, diag2(2.0, 0.5));
  OseledetsSplittingEstimate s2 = oseledets_splitting(gen, pt, 30);
  Vector ef = s2.bases[1].col(0);
  auto inner2 = lyapunov_inner(gen, s2, ef, ef, eps, trunc);
  CHECK(inner2.value == doctest::Approx(2.0 * geom).epsilon(1e-9));

  // vectors in distinct blocks are declared orthogonal
  Vector a = s2.bases[0].col(0), b = s2.bases[1].col(0);
  auto cross = lyapunov_inner(gen, s2, a, b, eps, trunc);
  CHECK(cross.cross_subspace);
  CHECK(cross.value == 0.0);
}

TEST_CASE("lyapunov inner product: symmetry and positivity") {
  auto shift = make_full_shift(2);
  auto gen = make_constant(shift, diag2(2.0, 0.5));
  auto pt = shift->sample_points("max-entropy", 1, 140, 8, 140)[0];
  OseledetsSplittingEstimate split = oseledets_splitting(gen, pt, 30);
  Rng rng = make_rng(62);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    int b = t % 2;
    Vector u = split.bases[static_cast<std::size_t>(b)].col(0) * normal(rng);
    Vector v = split.bases[static_cast<std::size_t>(b)].col(0) * normal(rng);
    if (u.norm() == 0 || v.norm() == 0) continue;
    auto uv = lyapunov_inner(gen, split, u, v, 0.1, 100);
    auto vu = lyapunov_inner(gen, split, v, u, 0.1, 100);
    CHECK(uv.value == doctest::Approx(vu.value).epsilon(1e-12));
    auto uu = lyapunov_inner(gen, split, u, u, 0.1, 100);
    CHECK(uu.value > 0.0);
  }
}

TEST_CASE("regularity constant: closed form and lower bound") {
  auto shift = make_full_shift(2);
  double eps = 0.1;
  int trunc = 200;
  Matrix one(1, 1);
  one << 1.0;
  auto id1 = make_constant(shift, one);
  auto pt = shift->sample_points("max-entropy", 1, trunc + 40, 4, trunc + 40)[0];
  OseledetsSplittingEstimate split = oseledets_splitting(id1, pt, 30);
  RegularityEstimate reg = regularity_constant(id1, split, eps, trunc);
  double geom = 1.0;
  for (int n = 1; n <= trunc; ++n) geom += 2.0 * std::exp(-eps * n);
  CHECK(reg.k_eps == doctest::Approx(std::sqrt(geom)).epsilon(1e-10));
  CHECK(reg.k_eps >= 1.0);
  CHECK(reg.lambda_min >= 1.0 - 1e-9);
  CHECK(reg.metric_m_factor == 1);

  auto gen = make_constant(shift, diag2(2.0, 0.5));
  OseledetsSplittingEstimate s2 = oseledets_splitting(gen, pt, 30);
  RegularityEstimate r2 = regularity_constant(gen, s2, eps, trunc);
  CHECK(r2.k_eps >= 1.0);
  CHECK(r2.lambda_min >= 1.0 - 1e-9);
}

TEST_CASE("lyapunov norm inequalities hold with margin on constant cocycles") {
  auto shift = make_full_shift(2);
  auto gen = make_constant(shift, diag2(2.0, 0.5));
  auto pt = shift->sample_points("max-entropy", 1, 300, 5, 300)[0];
  LyapunovInequalityReport rep = verify_lyapunov_inequalities(gen, pt, 0.1, 200, 50, 30, 17);
  CHECK(rep.pass);
  CHECK(rep.block_growth_upper.min_margin > 0.0);
  CHECK(rep.block_growth_lower.min_margin > 0.0);
  CHECK(rep.top_norm_upper.min_margin > 0.0);
  CHECK(rep.top_norm_lower.min_margin > 0.0);

  auto cat = make_cat_map();
  auto deriv = make_derivative(cat);
  auto tp = cat->sample_points("lebesgue", 1, 300, 6)[0];
  LyapunovInequalityReport crep = verify_lyapunov_inequalities(deriv, tp, 0.1, 200, 50, 30, 18);
  CHECK(crep.pass);
}

TEST_CASE("spectra expose the determinant identity at every length") {
  auto shift = make_full_shift(2);
  auto gen = make_holder_series(shift, 3, 0.5, 0.4, 91);
  auto orbit = shift->sample_orbit("max-entropy", 5000, 14, gen.dependence_radius() + 2);
  LyapunovSpectrum s = spectrum_qr(gen, orbit);
  CHECK(s.diag.det_residual < 1e-6);
}
