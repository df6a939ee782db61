#include "cocyclelab/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cocyclelab {

namespace {

// Direction + log magnitude, so vector growth over long orbits never
// overflows.
struct ScaledVector {
  Vector dir;
  double log_mag = 0.0;

  static ScaledVector from(const Vector& v) {
    double n = v.norm();
    if (!(n > 0.0)) fail(ErrorCode::invalid_argument, "zero vector");
    return {v / n, std::log(n)};
  }
  void apply(const Matrix& a) {
    dir = a * dir;
    double n = dir.norm();
    if (!(n > 0.0) || !std::isfinite(n))
      fail(ErrorCode::singular_matrix, "vector annihilated by cocycle step");
    dir /= n;
    log_mag += std::log(n);
  }
};

double log_abs_det(const Matrix& a) {
  Eigen::PartialPivLU<Matrix> lu(a);
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) s += std::log(std::abs(lu.matrixLU()(i, i)));
  return s;
}

SpectrumDiagnostics diagnose(const std::vector<std::pair<std::int64_t, Vector>>& checkpoints,
                             const std::vector<std::pair<std::int64_t, double>>& det_checks) {
  SpectrumDiagnostics d;
  if (checkpoints.size() >= 2) {
    const auto& last = checkpoints.back();
    // compare against the checkpoint nearest to 90% of the run
    std::int64_t target = static_cast<std::int64_t>(0.9 * static_cast<double>(last.first));
    const auto* ref = &checkpoints.front();
    for (const auto& c : checkpoints)
      if (c.first <= target) ref = &c;
    if (last.first > ref->first) {
      double slope = (last.second - ref->second).cwiseAbs().maxCoeff() /
                     static_cast<double>(last.first - ref->first);
      d.tail_slope = slope;
      d.converged = slope < 1e-4;
    }
  }
  for (const auto& [n, r] : det_checks) d.det_residual = std::max(d.det_residual, r);
  return d;
}

}  // namespace

LyapunovSpectrum spectrum_qr(const CocycleGenerator& gen, const std::vector<Point>& orbit) {
  if (orbit.empty()) fail(ErrorCode::invalid_argument, "spectrum_qr: empty orbit");
  const int m = gen.dim();
  const std::int64_t steps = static_cast<std::int64_t>(orbit.size());
  Matrix q = Matrix::Identity(m, m);
  Vector sums = Vector::Zero(m);
  double det_sum = 0.0;
  std::vector<std::pair<std::int64_t, Vector>> checkpoints;
  std::vector<std::pair<std::int64_t, double>> det_checks;
  std::int64_t stride = std::max<std::int64_t>(1, steps / 256);
  for (std::int64_t t = 0; t < steps; ++t) {
    Matrix a = gen.evaluate(orbit[static_cast<std::size_t>(t)]);
    QrFactors f = qr_factor(a * q);
    q = f.q;
    for (int i = 0; i < m; ++i) sums(i) += std::log(f.r(i, i));
    det_sum += log_abs_det(a);
    if ((t + 1) % stride == 0 || t + 1 == steps) {
      Vector exps = sums / static_cast<double>(t + 1);
      std::sort(exps.data(), exps.data() + m);
      checkpoints.emplace_back(t + 1, exps);
      det_checks.emplace_back(t + 1, std::abs(sums.sum() - det_sum) / static_cast<double>(t + 1));
    }
  }
  LyapunovSpectrum out;
  out.steps = steps;
  out.exponents = sums / static_cast<double>(steps);
  std::sort(out.exponents.data(), out.exponents.data() + m);
  out.diag = diagnose(checkpoints, det_checks);
  out.trace = std::move(checkpoints);
  return out;
}

LyapunovSpectrum spectrum_via_compounds(const CocycleGenerator& gen,
                                        const std::vector<Point>& orbit) {
  if (orbit.empty()) fail(ErrorCode::invalid_argument, "spectrum_via_compounds: empty orbit");
  const int m = gen.dim();
  const std::int64_t steps = static_cast<std::int64_t>(orbit.size());
  std::vector<ScaledVector> w(static_cast<std::size_t>(m));
  for (int i = 1; i <= m; ++i) {
    Eigen::Index dim = 1;
    for (int t = 0; t < i; ++t) dim = dim * (m - t) / (t + 1);
    Rng rng = make_rng(0xc03d, static_cast<std::uint64_t>(i));
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(dim);
    for (Eigen::Index j = 0; j < dim; ++j) v(j) = normal(rng);
    w[static_cast<std::size_t>(i - 1)] = ScaledVector{v / v.norm(), 0.0};
  }
  double det_sum = 0.0;
  std::vector<std::pair<std::int64_t, Vector>> checkpoints;
  std::vector<std::pair<std::int64_t, double>> det_checks;
  std::int64_t stride = std::max<std::int64_t>(1, steps / 64);
  auto exponents_at = [&](std::int64_t t) {
    Vector tops(m);
    for (int i = 1; i <= m; ++i) tops(i - 1) = w[static_cast<std::size_t>(i - 1)].log_mag /
                                               static_cast<double>(t);
    Vector exps(m);
    for (int i = 1; i <= m; ++i)
      exps(m - i) = tops(i - 1) - (i >= 2 ? tops(i - 2) : 0.0);
    std::sort(exps.data(), exps.data() + m);
    return exps;
  };
  for (std::int64_t t = 0; t < steps; ++t) {
    Matrix a = gen.evaluate(orbit[static_cast<std::size_t>(t)]);
    for (int i = 1; i <= m; ++i)
      w[static_cast<std::size_t>(i - 1)].apply(i == 1 ? a : compound(a, i));
    det_sum += log_abs_det(a);
    if ((t + 1) % stride == 0 || t + 1 == steps) {
      checkpoints.emplace_back(t + 1, exponents_at(t + 1));
      det_checks.emplace_back(
          t + 1, std::abs(w[static_cast<std::size_t>(m - 1)].log_mag - det_sum) /
                     static_cast<double>(t + 1));
    }
  }
  LyapunovSpectrum out;
  out.steps = steps;
  out.exponents = exponents_at(steps);
  out.diag = diagnose(checkpoints, det_checks);
  out.trace = std::move(checkpoints);
  return out;
}

LyapunovSpectrum periodic_spectrum(const CocycleGenerator& gen, const Point& p, std::int64_t n) {
  if (n < 1) fail(ErrorCode::invalid_argument, "periodic_spectrum: period must be positive");
  const System& sys = gen.system();
  double ret = sys.distance(p, sys.step(p, n));
  if (ret > 1e-12)
    fail(ErrorCode::precondition,
         "periodic_spectrum: point is not n-periodic (dist = " + std::to_string(ret) + ")");
  CocycleValue val = gen.product(p, n);
  Vector logs = val.value.eigen_log_moduli();
  LyapunovSpectrum out;
  out.steps = n;
  out.exponents = logs / static_cast<double>(n);
  out.diag.converged = true;
  return out;
}

namespace {

// Orthonormal basis of the span of the selected columns.
Matrix orthonormal(const Matrix& cols) {
  Eigen::HouseholderQR<Matrix> qr(cols);
  Matrix q = qr.householderQ();
  return q.leftCols(cols.cols());
}

// Principal-angle intersection of two subspaces given by orthonormal bases.
struct IntersectResult {
  Matrix basis;
  double quality;  // 1 - smallest principal cosine used
};
IntersectResult intersect_subspaces(const Matrix& b1, const Matrix& b2, int want) {
  Eigen::JacobiSVD<Matrix> svd(b1.transpose() * b2, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues().size() < want)
    fail(ErrorCode::degenerate_spectrum, "subspace intersection rank deficiency");
  double cos_k = svd.singularValues()(want - 1);
  if (cos_k < 0.9)
    fail(ErrorCode::degenerate_spectrum,
         "subspace intersection ill conditioned (principal cosine " + std::to_string(cos_k) + ")");
  Matrix dirs = b1 * svd.matrixU().leftCols(want);
  return {orthonormal(dirs), 1.0 - cos_k};
}

struct RawSplit {
  std::vector<double> exponents;  // ascending per block
  std::vector<int> mult;
  std::vector<Matrix> bases;
  double noise;
  bool merged;
  double quality;
};

RawSplit raw_splitting(const CocycleGenerator& gen, const Point& x, int window) {
  const int m = gen.dim();
  const System& sys = gen.system();
  // Dense window products put trailing singular values below the floating
  // floor, so both filtrations are accumulated by per-step QR instead.
  //
  // Fast flag at x (vectors reached from the past with top growth): leading
  // columns of the QR accumulation of A along f^{-window} x, ..., f^{-1} x.
  Matrix q_fast = Matrix::Identity(m, m);
  Point cur = sys.step(x, -window);
  for (int i = 0; i < window; ++i) {
    q_fast = qr_factor(gen.evaluate(cur) * q_fast).q;
    cur = sys.step(cur, 1);
  }
  // Slow flag at x (vectors of bounded forward growth): trailing columns of
  // the QR accumulation of the transposed factors in reversed order, whose
  // leading columns converge to the top right-singular subspaces of the
  // forward window product. The R diagonals give all singular exponents.
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(window));
  cur = x;
  for (int i = 0; i < window; ++i) {
    pts.push_back(cur);
    cur = sys.step(cur, 1);
  }
  Matrix q_slow = Matrix::Identity(m, m);
  Vector sums = Vector::Zero(m);
  for (int t = window - 1; t >= 0; --t) {
    QrFactors f = qr_factor(gen.evaluate(pts[static_cast<std::size_t>(t)]).transpose() * q_slow);
    q_slow = f.q;
    for (int i = 0; i < m; ++i) sums(i) += std::log(f.r(i, i));
  }
  std::vector<double> chi_f(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) chi_f[static_cast<std::size_t>(i)] = sums(i) / window;

  RawSplit out;
  out.noise = 2.0 / static_cast<double>(window);
  out.merged = false;
  for (int i = 0; i + 1 < m; ++i)
    if (chi_f[static_cast<std::size_t>(i)] < chi_f[static_cast<std::size_t>(i + 1)] - 3.0 * out.noise)
      fail(ErrorCode::degenerate_spectrum,
           "QR rates out of order: window too short for a stable filtration");

  // group descending forward exponents
  std::vector<std::pair<int, int>> blocks;  // [lo, hi) in singular index order
  int lo = 0;
  for (int i = 1; i <= m; ++i) {
    if (i == m || chi_f[static_cast<std::size_t>(i - 1)] - chi_f[static_cast<std::size_t>(i)] >=
                      3.0 * out.noise) {
      blocks.emplace_back(lo, i);
      if (i < m) {
        double gap = chi_f[static_cast<std::size_t>(i - 1)] - chi_f[static_cast<std::size_t>(i)];
        if (gap * window < std::log(1e6))
          fail(ErrorCode::degenerate_spectrum,
               "spectral gap " + std::to_string(gap) + " unresolvable at window " +
                   std::to_string(window));
      }
      lo = i;
    } else {
      out.merged = true;
    }
  }

  out.quality = 0.0;
  if (blocks.size() == 1) {
    out.exponents.push_back(std::accumulate(chi_f.begin(), chi_f.end(), 0.0) / m);
    out.mult.push_back(m);
    out.bases.push_back(Matrix::Identity(m, m));
    return out;
  }

  // descending blocks; assemble ascending at the end
  std::vector<double> exps_desc;
  std::vector<int> mult_desc;
  std::vector<Matrix> bases_desc;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto [blo, bhi] = blocks[b];
    int mb = bhi - blo;
    double chi = 0.0;
    for (int i = blo; i < bhi; ++i) chi += chi_f[static_cast<std::size_t>(i)];
    chi /= mb;
    // E_b = (vectors growing at most chi_b forward) /\ (fast flag of rank bhi)
    Matrix slow_fwd = q_slow.rightCols(m - blo);
    Matrix fast_bwd = q_fast.leftCols(bhi);
    auto inter = intersect_subspaces(slow_fwd, fast_bwd, mb);
    out.quality = std::max(out.quality, inter.quality);
    exps_desc.push_back(chi);
    mult_desc.push_back(mb);
    bases_desc.push_back(inter.basis);
  }
  for (std::size_t b = blocks.size(); b-- > 0;) {
    out.exponents.push_back(exps_desc[b]);
    out.mult.push_back(mult_desc[b]);
    out.bases.push_back(bases_desc[b]);
  }
  return out;
}

double max_principal_angle(const Matrix& q1, const Matrix& q2) {
  if (q1.cols() != q2.cols()) return M_PI / 2.0;
  Eigen::JacobiSVD<Matrix> svd(q1.transpose() * q2);
  double c = std::clamp(svd.singularValues()(svd.singularValues().size() - 1), -1.0, 1.0);
  return std::acos(c);
}

}  // namespace

OseledetsSplittingEstimate oseledets_splitting(const CocycleGenerator& gen, const Point& x,
                                               int window) {
  if (window < 4) fail(ErrorCode::invalid_argument, "oseledets_splitting: window too short");
  RawSplit here = raw_splitting(gen, x, window);
  OseledetsSplittingEstimate out;
  out.base = x;
  out.window = window;
  out.exponents = here.exponents;
  out.multiplicities = here.mult;
  out.bases = here.bases;
  out.noise_level = here.noise;
  out.merged = here.merged;
  out.intersection_quality = here.quality;

  // invariance: A(x) E_i(x) should align with E_i(fx)
  Point fx = gen.system().step(x, 1);
  RawSplit next = raw_splitting(gen, fx, window);
  Matrix a = gen.evaluate(x);
  double angle = 0.0;
  if (next.mult == here.mult) {
    for (std::size_t b = 0; b < here.bases.size(); ++b)
      angle = std::max(angle, max_principal_angle(orthonormal(a * here.bases[b]), next.bases[b]));
  } else {
    angle = M_PI / 2.0;
  }
  out.invariance_angle = angle;
  return out;
}

namespace {

int block_of(const OseledetsSplittingEstimate& split, const Vector& u, double tol = 1e-6) {
  int best = -1;
  double best_res = std::numeric_limits<double>::max();
  for (std::size_t b = 0; b < split.bases.size(); ++b) {
    const Matrix& q = split.bases[b];
    double res = (u - q * (q.transpose() * u)).norm() / u.norm();
    if (res < best_res) {
      best_res = res;
      best = static_cast<int>(b);
    }
  }
  if (best_res > tol) return -1;  // not inside any single block
  return best;
}

}  // namespace

namespace {

// A(f^k x) for k in [-back, fwd), evaluated once.
struct EvalSpan {
  std::vector<Matrix> a;
  std::int64_t back = 0;
  const Matrix& at(std::int64_t k) const { return a[static_cast<std::size_t>(k + back)]; }
};

EvalSpan make_eval_span(const CocycleGenerator& gen, const Point& x, std::int64_t back,
                        std::int64_t fwd) {
  EvalSpan s;
  s.back = back;
  s.a.reserve(static_cast<std::size_t>(back + fwd));
  Point cur = gen.system().step(x, -back);
  for (std::int64_t k = -back; k < fwd; ++k) {
    s.a.push_back(gen.evaluate(cur));
    cur = gen.system().step(cur, 1);
  }
  return s;
}

// Local filtrations at offset k, per-step QR accumulated (see raw_splitting).
Matrix slow_flag_at(const EvalSpan& ev, std::int64_t k, int window, int m) {
  Matrix q = Matrix::Identity(m, m);
  for (std::int64_t t = k + window - 1; t >= k; --t) q = qr_factor(ev.at(t).transpose() * q).q;
  return q;
}

Matrix fast_flag_at(const EvalSpan& ev, std::int64_t k, int window, int m) {
  Matrix q = Matrix::Identity(m, m);
  for (std::int64_t t = k - window; t < k; ++t) q = qr_factor(ev.at(t) * q).q;
  return q;
}

struct BlockTrack {
  std::vector<Matrix> units;       // n = 0..steps, operator norm 1
  std::vector<double> log_scales;  // cumulative removed factors
};

// Evolves a block basis with per-step re-projection onto the local flag of
// the matching rank. Without the projection, finite precision leaks faster
// directions into the block and the image grows at the wrong exponent after
// roughly log(1/eps) / gap steps.
BlockTrack purified_track(const EvalSpan& ev, const Matrix& basis, int steps, int direction,
                          int window, int flag_dim, int m) {
  BlockTrack tr;
  Matrix w = basis;
  double s = 0.0;
  tr.units.push_back(w);
  tr.log_scales.push_back(0.0);
  for (int n = 1; n <= steps; ++n) {
    if (direction > 0)
      w = ev.at(n - 1) * w;
    else
      w = safe_inverse(ev.at(-n)) * w;
    if (flag_dim < m) {
      Matrix q = direction > 0 ? Matrix(slow_flag_at(ev, n, window, m).rightCols(flag_dim))
                               : Matrix(fast_flag_at(ev, -n, window, m).leftCols(flag_dim));
      w = q * (q.transpose() * w);
    }
    double norm = operator_norm(w);
    if (!(norm > 0.0) || !std::isfinite(norm))
      fail(ErrorCode::degenerate_spectrum, "block annihilated during purified evolution");
    w /= norm;
    s += std::log(norm);
    tr.units.push_back(w);
    tr.log_scales.push_back(s);
  }
  return tr;
}

}  // namespace

LyapunovGram lyapunov_gram(const CocycleGenerator& gen, const OseledetsSplittingEstimate& split,
                           double epsilon, int truncation) {
  if (!(epsilon > 0)) fail(ErrorCode::invalid_argument, "lyapunov_gram: epsilon must be positive");
  const int m = gen.dim();
  const int window = split.window;
  Matrix stacked(m, m);
  int col = 0;
  for (const auto& b : split.bases) {
    stacked.middleCols(col, b.cols()) = b;
    col += static_cast<int>(b.cols());
  }
  Matrix stacked_inv = safe_inverse(stacked);

  EvalSpan ev = make_eval_span(gen, split.base, truncation + window, truncation + window);

  Matrix block_diag = Matrix::Zero(m, m);
  double tail = 0.0, lead = 0.0;
  int offset = 0;
  for (std::size_t b = 0; b < split.bases.size(); ++b) {
    const Matrix& basis = split.bases[b];
    const int mb = static_cast<int>(basis.cols());
    const double chi = split.exponents[b];
    const int alo = offset, ahi = offset + mb;  // ascending cumulative ranks
    Matrix acc = static_cast<double>(m) * basis.transpose() * basis;  // n = 0 term
    auto run = [&](int direction, int flag_dim) {
      BlockTrack tr = purified_track(ev, basis, truncation, direction, window, flag_dim, m);
      double last = 0.0;
      for (int n = 1; n <= truncation; ++n) {
        double log_w = 2.0 * tr.log_scales[static_cast<std::size_t>(n)] -
                       2.0 * chi * direction * n - epsilon * n;
        double weight = static_cast<double>(m) * std::exp(std::min(log_w, 700.0));
        const Matrix& u = tr.units[static_cast<std::size_t>(n)];
        Matrix term = weight * u.transpose() * u;
        acc += term;
        last = operator_norm(term);
      }
      return last;
    };
    double t1 = run(+1, ahi);       // slow flag: everything growing at most chi_b
    double t2 = run(-1, m - alo);   // fast flag: everything growing at least chi_b
    double rho = std::exp(-epsilon / 2.0);
    tail += (t1 + t2) * rho / (1.0 - rho);
    lead += operator_norm(acc);
    block_diag.block(offset, offset, mb, mb) = acc;
    offset += mb;
  }
  LyapunovGram out;
  out.gram = stacked_inv.transpose() * block_diag * stacked_inv;
  out.gram = 0.5 * (out.gram + out.gram.transpose().eval());
  out.tail_rel = tail / std::max(lead, 1e-300);
  return out;
}

LyapunovInnerResult lyapunov_inner(const CocycleGenerator& gen,
                                   const OseledetsSplittingEstimate& split, const Vector& u,
                                   const Vector& v, double epsilon, int truncation) {
  if (!(epsilon > 0)) fail(ErrorCode::invalid_argument, "lyapunov_inner: epsilon must be positive");
  LyapunovInnerResult out;
  int bu = block_of(split, u), bv = block_of(split, v);
  if (bu < 0 || bv < 0 || bu != bv) {
    out.cross_subspace = true;  // distinct Lyapunov spaces are declared orthogonal
    return out;
  }
  LyapunovGram g = lyapunov_gram(gen, split, epsilon, truncation);
  out.value = u.dot(g.gram * v);
  out.tail_bound = g.tail_rel * std::sqrt(u.dot(g.gram * u) * v.dot(g.gram * v));
  return out;
}

RegularityEstimate regularity_constant(const CocycleGenerator& gen,
                                       const OseledetsSplittingEstimate& split, double epsilon,
                                       int truncation) {
  LyapunovGram g = lyapunov_gram(gen, split, epsilon, truncation);
  Eigen::SelfAdjointEigenSolver<Matrix> es(g.gram);
  RegularityEstimate out;
  out.k_eps = std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0));
  out.lambda_min = es.eigenvalues().minCoeff();
  out.tail_rel = g.tail_rel;
  out.epsilon = epsilon;
  out.truncation = truncation;
  out.metric_m_factor = gen.dim();
  return out;
}

namespace {

Matrix sym_sqrt(const Matrix& g, bool invert) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(g);
  Vector d = es.eigenvalues();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) <= 0) fail(ErrorCode::degenerate_spectrum, "Lyapunov Gram not positive definite");
    d(i) = invert ? 1.0 / std::sqrt(d(i)) : std::sqrt(d(i));
  }
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

LyapunovInequalityReport verify_lyapunov_inequalities(const CocycleGenerator& gen, const Point& x,
                                                      double epsilon, int truncation, int n_max,
                                                      int window, std::uint64_t seed) {
  const int m = gen.dim();
  const System& sys = gen.system();
  LyapunovInequalityReport rep;

  OseledetsSplittingEstimate split0 = oseledets_splitting(gen, x, window);
  LyapunovGram g0 = lyapunov_gram(gen, split0, epsilon, truncation);
  double k0 = std::sqrt(Eigen::SelfAdjointEigenSolver<Matrix>(g0.gram).eigenvalues().maxCoeff());

  std::vector<int> ns;
  for (int n = 1; n <= n_max; n = (n < 8 ? n + 1 : n * 2)) ns.push_back(std::min(n, n_max));
  if (ns.back() != n_max) ns.push_back(n_max);

  double allowance = 10.0 * g0.tail_rel + 2.0 * split0.intersection_quality +
                     2.0 * split0.invariance_angle + 1e-9;
  rep.block_growth_upper.min_margin = std::numeric_limits<double>::infinity();
  rep.block_growth_lower.min_margin = std::numeric_limits<double>::infinity();
  rep.top_norm_upper.min_margin = std::numeric_limits<double>::infinity();
  rep.top_norm_lower.min_margin = std::numeric_limits<double>::infinity();
  rep.norm_comparison.min_margin = std::numeric_limits<double>::infinity();
  rep.k_drift.min_margin = std::numeric_limits<double>::infinity();
  auto note = [](InequalityMargins& mgn, double margin) {
    mgn.min_margin = std::min(mgn.min_margin, margin);
  };

  Rng rng = make_rng(seed, 0x1e9);
  std::normal_distribution<double> normal(0.0, 1.0);

  // purified per-block evolution over the whole n range, shared across samples
  EvalSpan ev = make_eval_span(gen, x, window + 1, n_max + window + 1);
  std::vector<BlockTrack> tracks;
  int offset = 0;
  for (std::size_t b = 0; b < split0.bases.size(); ++b) {
    int ahi = offset + static_cast<int>(split0.bases[b].cols());
    tracks.push_back(purified_track(ev, split0.bases[b], n_max, +1, window, ahi, m));
    offset = ahi;
  }

  ScaledMatrix prod = ScaledMatrix::identity(m);
  int prod_at = 0;

  for (int n : ns) {
    Point fx = sys.step(x, n);
    OseledetsSplittingEstimate splitn = oseledets_splitting(gen, fx, window);
    LyapunovGram gn = lyapunov_gram(gen, splitn, epsilon, truncation);
    allowance = std::max(allowance, 10.0 * gn.tail_rel + 2.0 * splitn.intersection_quality + 1e-9);

    Matrix sqrt_gn = sym_sqrt(gn.gram, false);
    Matrix isqrt_g0 = sym_sqrt(g0.gram, true);

    // growth through each estimated subspace, measured in the Lyapunov norms
    for (std::size_t b = 0; b < split0.bases.size(); ++b) {
      const Matrix& basis = split0.bases[b];
      double chi = split0.exponents[b];
      const BlockTrack& tr = tracks[b];
      for (int trial = 0; trial < static_cast<int>(basis.cols()) + 2; ++trial) {
        Vector c(basis.cols());
        if (trial < static_cast<int>(basis.cols()))
          c = Vector::Unit(basis.cols(), trial);
        else
          for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = normal(rng);
        c /= c.norm();
        Vector u = basis * c;
        Vector w = tr.units[static_cast<std::size_t>(n)] * c;
        double log_w_norm = tr.log_scales[static_cast<std::size_t>(n)];
        double log_u_x = 0.5 * std::log(u.dot(g0.gram * u));
        double log_w_fx = log_w_norm + 0.5 * std::log(w.dot(gn.gram * w));
        // exp(n chi - eps n) ||u||_x <= ||A(x,n) u||_{f^n x} <= exp(n chi + eps n) ||u||_x
        note(rep.block_growth_upper, n * chi + epsilon * n + log_u_x - log_w_fx);
        note(rep.block_growth_lower, log_w_fx - (n * chi - epsilon * n) - log_u_x);
      }
    }

    // top-exponent operator norm in the Lyapunov metric (no purification:
    // the full product is dominated by the top block anyway)
    while (prod_at < n) {
      prod.left_multiply(ev.at(prod_at));
      ++prod_at;
    }
    double chi_top = split0.exponents.back();
    double log_norm_lyap = std::log(operator_norm(sqrt_gn * prod.unit() * isqrt_g0)) +
                           prod.log_scale();
    note(rep.top_norm_upper, n * (chi_top + epsilon) - log_norm_lyap);
    note(rep.top_norm_lower, log_norm_lyap - n * (chi_top - epsilon));

    // Euclidean-to-Lyapunov norm comparison with random matrices
    double kn = std::sqrt(Eigen::SelfAdjointEigenSolver<Matrix>(gn.gram).eigenvalues().maxCoeff());
    for (int trial = 0; trial < 3; ++trial) {
      Matrix a(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) a(i, j) = normal(rng);
      double log_a = std::log(operator_norm(a));
      double log_a_lyap = std::log(operator_norm(sqrt_gn * a * isqrt_g0));
      note(rep.norm_comparison, log_a_lyap - (log_a - std::log(k0)));
      note(rep.norm_comparison, (log_a + std::log(kn)) - log_a_lyap);
    }

    // K_eps drift along the orbit
    note(rep.k_drift, std::log(k0) + epsilon * n - std::log(kn));
    note(rep.k_drift, std::log(kn) + epsilon * n - std::log(k0));
  }

  rep.allowance = allowance;
  for (InequalityMargins* mgn :
       {&rep.block_growth_upper, &rep.block_growth_lower, &rep.top_norm_upper,
        &rep.top_norm_lower, &rep.norm_comparison, &rep.k_drift}) {
    mgn->pass = mgn->min_margin >= -allowance;
    rep.pass = rep.pass && mgn->pass;
  }
  return rep;
}

}  // namespace cocyclelab
