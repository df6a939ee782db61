#include "cocyclelab/base_systems.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace cocyclelab {

namespace {

using int128 = __int128;

std::int64_t checked_i64(int128 v, const char* where) {
  if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min())
    fail(ErrorCode::size_limit, std::string(where) + ": integer overflow");
  return static_cast<std::int64_t>(v);
}

// Exact integer matrix power with overflow checking.
Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> int_mat_pow(
    const Eigen::MatrixXi& l, int n) {
  using M64 = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
  int d = static_cast<int>(l.rows());
  M64 acc = M64::Identity(d, d);
  M64 base = l.cast<std::int64_t>();
  for (int s = 0; s < n; ++s) {
    M64 next(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        int128 v = 0;
        for (int t = 0; t < d; ++t) v += static_cast<int128>(acc(i, t)) * base(t, j);
        next(i, j) = checked_i64(v, "int_mat_pow");
      }
    acc = next;
  }
  return acc;
}

// Exact determinant via cofactor expansion (d <= 6 in practice).
int128 int_det(const Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>& m) {
  int d = static_cast<int>(m.rows());
  if (d == 1) return m(0, 0);
  if (d == 2) return static_cast<int128>(m(0, 0)) * m(1, 1) - static_cast<int128>(m(0, 1)) * m(1, 0);
  int128 det = 0;
  for (int j = 0; j < d; ++j) {
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> minor(d - 1, d - 1);
    for (int r = 1; r < d; ++r) {
      int cc = 0;
      for (int c = 0; c < d; ++c) {
        if (c == j) continue;
        minor(r - 1, cc++) = m(r, c);
      }
    }
    int128 term = static_cast<int128>(m(0, j)) * int_det(minor);
    det += (j % 2 == 0) ? term : -term;
  }
  return det;
}

Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> int_adjugate(
    const Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>& m) {
  int d = static_cast<int>(m.rows());
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> adj(d, d);
  if (d == 1) {
    adj(0, 0) = 1;
    return adj;
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> minor(d - 1, d - 1);
      int rr = 0;
      for (int r = 0; r < d; ++r) {
        if (r == i) continue;
        int cc = 0;
        for (int c = 0; c < d; ++c) {
          if (c == j) continue;
          minor(rr, cc++) = m(r, c);
        }
        ++rr;
      }
      int128 cof = int_det(minor);
      if ((i + j) % 2 != 0) cof = -cof;
      adj(j, i) = checked_i64(cof, "int_adjugate");  // transposed cofactor
    }
  return adj;
}

std::int64_t pos_mod(int128 a, std::int64_t n) {
  int128 r = a % n;
  if (r < 0) r += n;
  return static_cast<std::int64_t>(r);
}

}  // namespace

// ---------------------------------------------------------------------------
// Shadowing verification (system-agnostic)
// ---------------------------------------------------------------------------

ShadowingReport verify_shadowing(const System& sys, const ShadowingTriple& t) {
  ShadowingReport rep;
  const double lambda = sys.closing().lambda;
  Point xi = t.x, pi = t.p, yi = t.y;
  auto update = [](ChainReport& ch, double lhs, double rhs, std::int64_t i) {
    double slack;
    if (rhs == 0.0)
      slack = (lhs == 0.0) ? 0.0 : std::numeric_limits<double>::infinity();
    else
      slack = lhs / rhs;
    if (slack > ch.worst_slack || ch.worst_index < 0) {
      ch.worst_slack = slack;
      ch.worst_index = i;
    }
    if (!(lhs <= rhs * (1.0 + 1e-9) + 1e-300)) ch.pass = false;
  };
  for (std::int64_t i = 0; i <= t.n; ++i) {
    double head = std::exp(-lambda * static_cast<double>(std::min(i, t.n - i)));
    update(rep.traj_xp, sys.distance(xi, pi), t.delta * head, i);
    update(rep.stable_py, sys.distance(pi, yi), t.delta * std::exp(-lambda * static_cast<double>(i)), i);
    update(rep.unstable_yx, sys.distance(yi, xi),
           t.delta * std::exp(-lambda * static_cast<double>(t.n - i)), i);
    if (i < t.n) {
      xi = sys.step(xi, 1);
      pi = sys.step(pi, 1);
      yi = sys.step(yi, 1);
    }
  }
  rep.pass = rep.traj_xp.pass && rep.stable_py.pass && rep.unstable_yx.pass;
  return rep;
}

// ---------------------------------------------------------------------------
// Subshift of finite type
// ---------------------------------------------------------------------------

SftSystem::SftSystem(int alphabet, Eigen::MatrixXi transitions, double metric_base,
                     std::int64_t enumeration_cap, std::int64_t default_margin)
    : k_(alphabet),
      trans_(std::move(transitions)),
      base_(metric_base),
      enumeration_cap_(enumeration_cap),
      default_margin_(default_margin) {
  if (k_ < 1 || trans_.rows() != k_ || trans_.cols() != k_)
    fail(ErrorCode::config, "sft: transition matrix must be k x k");
  if (!(base_ > 1.0)) fail(ErrorCode::config, "sft: metric base must exceed 1");
  for (int i = 0; i < k_; ++i)
    for (int j = 0; j < k_; ++j)
      if (trans_(i, j) != 0 && trans_(i, j) != 1)
        fail(ErrorCode::config, "sft: transition entries must be 0/1");

  // primitivity: some power strictly positive (bound (k-1)^2 + 1)
  Eigen::MatrixXi pow = Eigen::MatrixXi::Identity(k_, k_);
  bool primitive = false;
  int bound = (k_ - 1) * (k_ - 1) + 1;
  for (int s = 1; s <= std::max(bound, 1); ++s) {
    Eigen::MatrixXi next = Eigen::MatrixXi::Zero(k_, k_);
    for (int i = 0; i < k_; ++i)
      for (int j = 0; j < k_; ++j) {
        int v = 0;
        for (int t = 0; t < k_; ++t) v = v || (pow(i, t) && trans_(t, j));
        next(i, j) = v;
      }
    pow = next;
    if ((pow.array() > 0).all()) {
      primitive = true;
      break;
    }
  }
  if (!primitive) fail(ErrorCode::config, "sft: transition matrix is not primitive");

  closing_ = ClosingSpec{1.0, std::log(base_), 1.0 / base_};

  // Parry (max-entropy) chain from the Perron eigendata.
  Eigen::MatrixXd td = trans_.cast<double>();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(k_), u = Eigen::VectorXd::Ones(k_);
  double lam = 0.0;
  for (int it = 0; it < 500; ++it) {
    v = td * v;
    lam = v.maxCoeff();
    v /= lam;
    u = td.transpose() * u;
    u /= u.maxCoeff();
  }
  parry_transition_ = Eigen::MatrixXd::Zero(k_, k_);
  for (int i = 0; i < k_; ++i)
    for (int j = 0; j < k_; ++j)
      if (trans_(i, j)) parry_transition_(i, j) = v(j) / (lam * v(i));
  for (int i = 0; i < k_; ++i) parry_transition_.row(i) /= parry_transition_.row(i).sum();
  parry_initial_ = (u.array() * v.array()).matrix();
  parry_initial_ /= parry_initial_.sum();

  // shortest connecting paths for net construction
  next_hop_.assign(k_, std::vector<int>(k_, -1));
  for (int src = 0; src < k_; ++src) {
    std::vector<int> dist(k_, -1), from(k_, -1);
    std::deque<int> queue;
    for (int j = 0; j < k_; ++j)
      if (trans_(src, j)) {
        dist[j] = 1;
        from[j] = src;
        queue.push_back(j);
      }
    while (!queue.empty()) {
      int cur = queue.front();
      queue.pop_front();
      for (int j = 0; j < k_; ++j)
        if (trans_(cur, j) && dist[j] < 0) {
          dist[j] = dist[cur] + 1;
          from[j] = cur;
          queue.push_back(j);
        }
    }
    for (int dst = 0; dst < k_; ++dst) {
      if (dist[dst] < 0) fail(ErrorCode::config, "sft: transition graph not strongly connected");
      int cur = dst;
      while (from[cur] != src) cur = from[cur];
      next_hop_[src][dst] = cur;
    }
  }
}

std::vector<int> SftSystem::connecting_word(int a, int b) const {
  std::vector<int> out;
  if (trans_(a, b)) return out;
  int cur = a;
  while (true) {
    cur = next_hop_[cur][b];
    if (cur == b) break;
    out.push_back(cur);
  }
  return out;
}

Point SftSystem::step(const Point& x, std::int64_t k) const {
  return Point(x.symbolic().shifted(k));
}

double SftSystem::distance(const Point& a, const Point& b) const {
  auto scan = first_disagreement(a.symbolic(), b.symbolic());
  if (scan.radius < 0) return 0.0;
  // When a window runs out before a disagreement is found, the scan radius
  // still gives the supremum over consistent extensions.
  return std::pow(base_, -static_cast<double>(scan.radius));
}

std::vector<int> SftSystem::sample_word(std::int64_t len, Rng& rng) const {
  std::vector<int> w(static_cast<std::size_t>(len));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto draw = [&](const Eigen::VectorXd& probs) {
    double r = unif(rng), acc = 0.0;
    for (int s = 0; s < k_; ++s) {
      acc += probs(s);
      if (r < acc) return s;
    }
    return k_ - 1;
  };
  w[0] = draw(parry_initial_);
  for (std::int64_t i = 1; i < len; ++i)
    w[static_cast<std::size_t>(i)] = draw(parry_transition_.row(w[static_cast<std::size_t>(i - 1)]));
  return w;
}

std::vector<Point> SftSystem::sample_orbit(std::string_view measure, std::int64_t length,
                                           std::uint64_t seed, std::int64_t margin) const {
  if (measure != "max-entropy")
    fail(ErrorCode::invalid_argument, "sft: unknown measure id '" + std::string(measure) + "'");
  if (length < 1) fail(ErrorCode::invalid_argument, "sample_orbit: length must be positive");
  std::int64_t m = std::max(margin, default_margin_);
  Rng rng = make_rng(seed, 0x5f7);
  std::vector<int> word = sample_word(length + 2 * m, rng);
  SymbolicPoint x0 = SymbolicPoint::window(std::move(word), -m);
  std::vector<Point> orbit;
  orbit.reserve(static_cast<std::size_t>(length));
  for (std::int64_t i = 0; i < length; ++i) orbit.emplace_back(x0.shifted(i));
  return orbit;
}

std::vector<Point> SftSystem::sample_points(std::string_view measure, int count,
                                            std::int64_t horizon, std::uint64_t seed,
                                            std::int64_t margin) const {
  if (measure != "max-entropy")
    fail(ErrorCode::invalid_argument, "sft: unknown measure id '" + std::string(measure) + "'");
  std::int64_t m = std::max(margin, default_margin_);
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng = make_rng(seed, 0xa11c + static_cast<std::uint64_t>(i));
    pts.emplace_back(SymbolicPoint::window(sample_word(horizon + 2 * m + 1, rng), -m));
  }
  return pts;
}

std::vector<PeriodicPoint> SftSystem::enumerate_periodic(int n) const {
  if (n < 1) fail(ErrorCode::invalid_argument, "enumerate_periodic: n must be positive");
  double estimate = std::pow(static_cast<double>(k_), n);
  if (estimate > static_cast<double>(enumeration_cap_)) {
    std::ostringstream os;
    os << "enumerate_periodic: about " << estimate << " candidate words exceed cap "
       << enumeration_cap_;
    fail(ErrorCode::size_limit, os.str());
  }
  std::vector<PeriodicPoint> out;
  std::vector<int> word(static_cast<std::size_t>(n), 0);
  // DFS over admissible words with admissible wrap transition.
  std::function<void(int)> dfs = [&](int pos) {
    if (pos == n) {
      if (!trans_(word[static_cast<std::size_t>(n - 1)], word[0])) return;
      int period = n;
      for (int d = 1; d < n; ++d) {
        if (n % d != 0) continue;
        bool ok = true;
        for (int i = 0; i + d < n && ok; ++i) ok = word[i] == word[i + d];
        if (ok) {
          period = d;
          break;
        }
      }
      out.push_back({Point(SymbolicPoint::periodic(word)), period});
      return;
    }
    for (int s = 0; s < k_; ++s) {
      if (pos > 0 && !trans_(word[static_cast<std::size_t>(pos - 1)], s)) continue;
      word[static_cast<std::size_t>(pos)] = s;
      dfs(pos + 1);
    }
  };
  dfs(0);
  return out;
}

ShadowingTriple SftSystem::close_pseudo_return(const Point& x, std::int64_t n) const {
  if (n < 1) fail(ErrorCode::invalid_argument, "close_pseudo_return: n must be positive");
  const SymbolicPoint& sx = x.symbolic();
  Point fnx = step(x, n);
  double d = distance(x, fnx);
  if (!(d < closing_.delta0)) {
    std::ostringstream os;
    os << "close_pseudo_return: dist(x, f^n x) = " << d << " is not below delta0 = "
       << closing_.delta0;
    fail(ErrorCode::precondition, os.str());
  }
  if (d == 0.0) return {x, x, x, n, 0.0};
  std::vector<int> word(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) word[static_cast<std::size_t>(i)] = sx.coord(i);
  // d < 1/b forces agreement at |i| <= 1, so the wrap pair occurs inside x.
  if (!trans_(word[static_cast<std::size_t>(n - 1)], word[0]))
    fail(ErrorCode::internal, "close_pseudo_return: inadmissible wrap despite d < delta0");
  SymbolicPoint p = SymbolicPoint::periodic(std::move(word));
  SymbolicPoint y = SymbolicPoint::splice(sx, p);
  return {x, Point(p), Point(y), n, closing_.c * d};
}

DenseOrbitNet SftSystem::dense_net(double delta, std::int64_t max_length) const {
  if (!(delta > 0)) fail(ErrorCode::invalid_argument, "dense_net: delta must be positive");
  DenseOrbitNet net;
  if (delta >= diameter()) {
    // a single point covers X
    std::vector<int> cycle{0};
    auto conn = connecting_word(0, 0);
    cycle.insert(cycle.end(), conn.begin(), conn.end());
    SymbolicPoint z = SymbolicPoint::periodic(cycle);
    net.base = Point(z);
    net.indices = {0};
    net.points = {Point(z)};
    net.mesh = diameter();
    net.exact_cover = true;
    net.orbit_length = static_cast<std::int64_t>(cycle.size());
    return net;
  }
  // covering radius R: agreement on |i| <= R gives dist <= b^{-(R+1)} <= delta
  int r = 0;
  while (std::pow(base_, -(r + 1)) > delta) ++r;
  int w = 2 * r + 1;

  std::vector<std::vector<int>> words;
  std::vector<int> cur;
  std::function<void(int)> dfs = [&](int pos) {
    if (pos == w) {
      words.push_back(cur);
      return;
    }
    for (int s = 0; s < k_; ++s) {
      if (pos > 0 && !trans_(cur.back(), s)) continue;
      cur.push_back(s);
      dfs(pos + 1);
      cur.pop_back();
    }
  };
  if (std::pow(static_cast<double>(k_), w) > static_cast<double>(enumeration_cap_))
    fail(ErrorCode::size_limit, "dense_net: cylinder enumeration exceeds cap");
  dfs(0);

  std::vector<int> zword;
  std::vector<std::int64_t> starts;
  for (std::size_t j = 0; j < words.size(); ++j) {
    starts.push_back(static_cast<std::int64_t>(zword.size()));
    zword.insert(zword.end(), words[j].begin(), words[j].end());
    int a = words[j].back();
    int b = words[(j + 1) % words.size()].front();
    auto conn = connecting_word(a, b);
    zword.insert(zword.end(), conn.begin(), conn.end());
  }
  if (static_cast<std::int64_t>(zword.size()) > max_length) {
    std::ostringstream os;
    os << "dense_net: required orbit length " << zword.size() << " exceeds max_length "
       << max_length << " (achieved mesh would need a shorter net)";
    fail(ErrorCode::coverage, os.str());
  }
  SymbolicPoint z = SymbolicPoint::periodic(zword);
  net.base = Point(z);
  net.orbit_length = static_cast<std::int64_t>(zword.size());
  for (std::size_t j = 0; j < words.size(); ++j) {
    std::int64_t idx = starts[j] + r;  // word centered at the net point
    net.indices.push_back(idx);
    net.points.emplace_back(z.shifted(idx));
  }
  net.mesh = std::pow(base_, -(r + 1));
  net.exact_cover = true;
  return net;
}

// ---------------------------------------------------------------------------
// Hyperbolic toral automorphism
// ---------------------------------------------------------------------------

ToralSystem::ToralSystem(Eigen::MatrixXi l) : d_(static_cast<int>(l.rows())), l_(std::move(l)) {
  if (d_ < 1 || l_.cols() != d_) fail(ErrorCode::config, "toral: matrix must be square");
  auto l64 = l_.cast<std::int64_t>().eval();
  int128 det = int_det(l64);
  if (det != 1 && det != -1) fail(ErrorCode::config, "toral: |det L| must equal 1");
  auto adj = int_adjugate(l64);
  l_inv_ = Eigen::MatrixXi(d_, d_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j)
      l_inv_(i, j) = static_cast<int>(det == 1 ? adj(i, j) : -adj(i, j));

  std::int64_t row_sum_cap = 0;
  for (int i = 0; i < d_; ++i) {
    std::int64_t s = 0;
    for (int j = 0; j < d_; ++j) s += std::abs(static_cast<std::int64_t>(l_(i, j))) +
                                      std::abs(static_cast<std::int64_t>(l_inv_(i, j)));
    row_sum_cap = std::max(row_sum_cap, s);
  }
  if (row_sum_cap > 500) fail(ErrorCode::config, "toral: matrix entries too large for exact stepping");

  Eigen::EigenSolver<Eigen::MatrixXd> es(l_.cast<double>());
  if (es.info() != Eigen::Success) fail(ErrorCode::internal, "toral: eigensolver failed");
  for (int i = 0; i < d_; ++i) {
    if (std::abs(es.eigenvalues()(i).imag()) > 1e-12)
      fail(ErrorCode::config, "toral: complex eigenvalues are not supported by the closing construction");
    if (std::abs(std::abs(es.eigenvalues()(i).real()) - 1.0) < 1e-9)
      fail(ErrorCode::config, "toral: eigenvalue on the unit circle (not hyperbolic)");
  }
  std::vector<int> order(d_);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(es.eigenvalues()(a).real()) > std::abs(es.eigenvalues()(b).real());
  });
  eigenvalues_.resize(d_);
  eigvec_.resize(d_, d_);
  for (int i = 0; i < d_; ++i) {
    eigenvalues_(i) = es.eigenvalues()(order[i]).real();
    Eigen::VectorXd v = es.eigenvectors().col(order[i]).real();
    eigvec_.col(i) = v / v.norm();
  }
  for (int i = 0; i + 1 < d_; ++i)
    if (std::abs(eigenvalues_(i) - eigenvalues_(i + 1)) < 1e-9)
      fail(ErrorCode::config, "toral: repeated eigenvalues are not supported");
  eigvec_inv_ = eigvec_.inverse();

  // closing constants from the eigenbasis conditioning and contraction rates
  double cond = operator_cond();
  double gu = 0.0, gs = 0.0, lam = std::numeric_limits<double>::max();
  for (int i = 0; i < d_; ++i) {
    double a = std::abs(eigenvalues_(i));
    lam = std::min(lam, std::abs(std::log(a)));
    if (a > 1.0)
      gu = std::max(gu, 1.0 / (1.0 - 1.0 / a));
    else
      gs = std::max(gs, 1.0 / (1.0 - a));
  }
  double c = 1.5 * cond * (gu + gs);
  double delta0 = std::min(0.05, 0.25 / c);
  closing_ = ClosingSpec{c, lam, delta0};

  // exact-representation cap: |det(L^n - I)| and the integer snap must stay
  // well inside 64-bit range
  double lmax = std::abs(eigenvalues_(0));
  double cap_det = std::log(1.5e15) / std::log(lmax);
  double cap_snap = std::log(0.25 / 1e-13) / std::log(lmax);
  period_cap_ = static_cast<std::int64_t>(std::floor(std::min(cap_det, cap_snap)));
}

double ToralSystem::operator_cond() const {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(eigvec_);
  return svd.singularValues()(0) / svd.singularValues()(d_ - 1);
}

double ToralSystem::diameter() const { return 0.5 * std::sqrt(static_cast<double>(d_)); }

double ToralSystem::step_lipschitz() const {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(l_.cast<double>());
  return svd.singularValues()(0);
}

RationalCoords ToralSystem::step_rational(const RationalCoords& rc, std::int64_t k) const {
  RationalCoords out = rc;
  const Eigen::MatrixXi& m = (k >= 0) ? l_ : l_inv_;
  for (std::int64_t s = 0; s < std::abs(k); ++s) {
    std::vector<std::int64_t> next(static_cast<std::size_t>(d_));
    for (int i = 0; i < d_; ++i) {
      int128 acc = 0;
      for (int j = 0; j < d_; ++j)
        acc += static_cast<int128>(m(i, j)) * out.num[static_cast<std::size_t>(j)];
      next[static_cast<std::size_t>(i)] = pos_mod(acc, out.den);
    }
    out.num = std::move(next);
  }
  return out;
}

Eigen::VectorXd ToralSystem::coords(const ToralPoint& p) const {
  if (p.is_rational()) return p.rational().to_doubles();
  if (p.is_real()) return p.real();
  const auto& a = p.anchored();
  Eigen::VectorXd v = a.anchor.to_doubles() + eigvec_ * a.eigen_coeffs;
  for (int i = 0; i < d_; ++i) v(i) -= std::floor(v(i));
  return v;
}

Point ToralSystem::step(const Point& x, std::int64_t k) const {
  const ToralPoint& t = x.toral();
  if (t.is_rational()) return Point(ToralPoint(step_rational(t.rational(), k)));
  if (t.is_anchored()) {
    AnchoredCoords out;
    out.anchor = step_rational(t.anchored().anchor, k);
    out.eigen_coeffs = t.anchored().eigen_coeffs;
    for (int i = 0; i < d_; ++i)
      out.eigen_coeffs(i) *= std::pow(eigenvalues_(i), static_cast<double>(k));
    return Point(ToralPoint(std::move(out)));
  }
  Eigen::VectorXd v = t.real();
  const Eigen::MatrixXd m = ((k >= 0) ? l_ : l_inv_).cast<double>();
  for (std::int64_t s = 0; s < std::abs(k); ++s) {
    v = m * v;
    for (int i = 0; i < d_; ++i) v(i) -= std::floor(v(i));
  }
  return Point(ToralPoint(std::move(v)));
}

Eigen::VectorXd ToralSystem::wrap_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  Eigen::VectorXd t = a - b;
  for (int i = 0; i < d_; ++i) t(i) -= std::rint(t(i));
  return t;
}

double ToralSystem::distance(const Point& a, const Point& b) const {
  const ToralPoint& ta = a.toral();
  const ToralPoint& tb = b.toral();
  // Anchored points measured against their own anchor (or a sibling sharing
  // it) use the offset directly; this stays accurate far below 1e-16.
  auto same_rational = [](const RationalCoords& x, const RationalCoords& y) {
    return x.den == y.den && x.num == y.num;
  };
  if (ta.is_anchored() && tb.is_rational() && same_rational(ta.anchored().anchor, tb.rational()))
    return (eigvec_ * ta.anchored().eigen_coeffs).norm();
  if (tb.is_anchored() && ta.is_rational() && same_rational(tb.anchored().anchor, ta.rational()))
    return (eigvec_ * tb.anchored().eigen_coeffs).norm();
  if (ta.is_anchored() && tb.is_anchored() && same_rational(ta.anchored().anchor, tb.anchored().anchor))
    return (eigvec_ * (ta.anchored().eigen_coeffs - tb.anchored().eigen_coeffs)).norm();
  if (ta.is_rational() && tb.is_rational() && same_rational(ta.rational(), tb.rational())) return 0.0;
  return wrap_diff(coords(ta), coords(tb)).norm();
}

std::vector<PeriodicPoint> ToralSystem::enumerate_periodic(int n) const {
  if (n < 1) fail(ErrorCode::invalid_argument, "enumerate_periodic: n must be positive");
  auto ln = int_mat_pow(l_, n);
  auto m = ln;
  for (int i = 0; i < d_; ++i) m(i, i) -= 1;
  int128 det = int_det(m);
  std::int64_t den = checked_i64(det < 0 ? -det : det, "enumerate_periodic");
  if (den == 0) fail(ErrorCode::internal, "enumerate_periodic: singular L^n - I");
  if (den > enumeration_cap_) {
    std::ostringstream os;
    os << "enumerate_periodic: |det(L^n - I)| = " << den << " exceeds cap " << enumeration_cap_;
    fail(ErrorCode::size_limit, os.str());
  }
  auto adj = int_adjugate(m);
  int sign = det < 0 ? -1 : 1;

  // Solutions form the subgroup of the torus generated by the columns of
  // (L^n - I)^{-1} mod 1; close it under addition.
  std::vector<std::vector<std::int64_t>> gens;
  for (int j = 0; j < d_; ++j) {
    std::vector<std::int64_t> g(static_cast<std::size_t>(d_));
    for (int i = 0; i < d_; ++i)
      g[static_cast<std::size_t>(i)] = pos_mod(static_cast<int128>(sign) * adj(i, j), den);
    gens.push_back(std::move(g));
  }
  struct VecHash {
    std::size_t operator()(const std::vector<std::int64_t>& v) const {
      std::size_t h = 0xcbf29ce484222325ULL;
      for (auto x : v) {
        h ^= static_cast<std::size_t>(x);
        h *= 0x100000001b3ULL;
      }
      return h;
    }
  };
  std::unordered_set<std::vector<std::int64_t>, VecHash> seen;
  std::deque<std::vector<std::int64_t>> frontier;
  std::vector<std::int64_t> zero(static_cast<std::size_t>(d_), 0);
  seen.insert(zero);
  frontier.push_back(zero);
  while (!frontier.empty()) {
    auto cur = frontier.front();
    frontier.pop_front();
    for (const auto& g : gens) {
      std::vector<std::int64_t> nxt(static_cast<std::size_t>(d_));
      for (int i = 0; i < d_; ++i)
        nxt[static_cast<std::size_t>(i)] =
            pos_mod(static_cast<int128>(cur[static_cast<std::size_t>(i)]) +
                        g[static_cast<std::size_t>(i)],
                    den);
      if (seen.insert(nxt).second) frontier.push_back(nxt);
    }
  }
  std::vector<PeriodicPoint> out;
  out.reserve(seen.size());
  for (const auto& num : seen) {
    RationalCoords rc{num, den};
    int period = 1;
    RationalCoords cur = step_rational(rc, 1);
    while (!(cur.num == rc.num) && period < n) {
      cur = step_rational(cur, 1);
      ++period;
    }
    out.push_back({Point(ToralPoint(rc)), period});
  }
  std::sort(out.begin(), out.end(), [](const PeriodicPoint& a, const PeriodicPoint& b) {
    return a.point.toral().rational().num < b.point.toral().rational().num;
  });
  return out;
}

ShadowingTriple ToralSystem::close_pseudo_return(const Point& x, std::int64_t n) const {
  if (n < 1) fail(ErrorCode::invalid_argument, "close_pseudo_return: n must be positive");
  if (n > period_cap_)
    fail(ErrorCode::precondition,
         "close_pseudo_return: n exceeds the exact-representation cap " + std::to_string(period_cap_));
  const ToralPoint& tx = x.toral();
  Point fnx = step(x, n);
  double d = distance(x, fnx);
  if (!(d < closing_.delta0)) {
    std::ostringstream os;
    os << "close_pseudo_return: dist(x, f^n x) = " << d << " is not below delta0 = "
       << closing_.delta0;
    fail(ErrorCode::precondition, os.str());
  }
  if (d == 0.0) return {x, x, x, n, 0.0};

  Eigen::VectorXd a = coords(tx);
  Eigen::VectorXd delta_vec = wrap_diff(coords(fnx.toral()), a);
  auto ln = int_mat_pow(l_, n);
  auto m = ln;
  for (int i = 0; i < d_; ++i) m(i, i) -= 1;
  int128 det = int_det(m);
  std::int64_t den = checked_i64(det < 0 ? -det : det, "close_pseudo_return");
  auto adj = int_adjugate(m);
  int sign = det < 0 ? -1 : 1;

  // p solves (L^n - I) p = (L^n - I) x - displacement over a lift, snapped to
  // the nearest exact period-n point q / det.
  Eigen::MatrixXd md = Eigen::MatrixXd(d_, d_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) md(i, j) = static_cast<double>(m(i, j));
  Eigen::VectorXd q_real = md * a - delta_vec;
  std::vector<std::int64_t> q(static_cast<std::size_t>(d_));
  for (int i = 0; i < d_; ++i) q[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(std::llround(q_real(i)));
  RationalCoords pc;
  pc.den = den;
  pc.num.resize(static_cast<std::size_t>(d_));
  for (int i = 0; i < d_; ++i) {
    int128 acc = 0;
    for (int j = 0; j < d_; ++j)
      acc += static_cast<int128>(sign) * adj(i, j) % den * q[static_cast<std::size_t>(j)] % den;
    pc.num[static_cast<std::size_t>(i)] = pos_mod(acc, den);
  }
  ToralPoint p(pc);

  Eigen::VectorXd v = wrap_diff(a, coords(p));
  Eigen::VectorXd coeffs = eigvec_inv_ * v;
  for (int i = 0; i < d_; ++i)
    if (std::abs(eigenvalues_(i)) > 1.0) coeffs(i) = 0.0;  // keep the stable component only
  ToralPoint y(AnchoredCoords{pc, coeffs});
  return {x, Point(p), Point(y), n, closing_.c * d};
}

DenseOrbitNet ToralSystem::dense_net(double delta, std::int64_t max_length) const {
  if (!(delta > 0)) fail(ErrorCode::invalid_argument, "dense_net: delta must be positive");
  DenseOrbitNet net;
  Rng rng = make_rng(0xdecade, 0);
  if (delta >= diameter()) {
    std::vector<Point> orbit = sample_orbit("lebesgue", 1, 0xdecade);
    net.base = orbit[0];
    net.indices = {0};
    net.points = {orbit[0]};
    net.mesh = diameter();
    net.exact_cover = false;
    net.orbit_length = 1;
    return net;
  }
  if (d_ > 3) fail(ErrorCode::size_limit, "dense_net: covering grid only supported for d <= 3");
  int g = static_cast<int>(std::ceil(2.0 / delta));
  g = std::min(g, 4096);
  double half_diag = 0.5 * std::sqrt(static_cast<double>(d_)) / g;
  double reach = delta - half_diag;  // grid point must be this close to a net point
  if (reach <= 0) fail(ErrorCode::invalid_argument, "dense_net: delta too small for the grid cap");

  std::int64_t cells = 1;
  for (int i = 0; i < d_; ++i) cells *= g;
  std::vector<double> best(static_cast<std::size_t>(cells), std::numeric_limits<double>::max());
  std::int64_t uncovered = cells;

  // exact start point so the whole net steps exactly
  std::uniform_int_distribution<std::int64_t> num_dist(0, (1LL << 53) - 1);
  RationalCoords rc;
  rc.den = 1LL << 53;
  rc.num.resize(static_cast<std::size_t>(d_));
  for (int i = 0; i < d_; ++i) rc.num[static_cast<std::size_t>(i)] = num_dist(rng);

  std::vector<Point> pts;
  RationalCoords cur = rc;
  int box = static_cast<int>(std::ceil(reach * g)) + 1;
  while (static_cast<std::int64_t>(pts.size()) < max_length && uncovered > 0) {
    pts.emplace_back(ToralPoint(cur));
    Eigen::VectorXd c = cur.to_doubles();
    // mark grid nodes within reach
    std::vector<int> base_idx(static_cast<std::size_t>(d_));
    for (int i = 0; i < d_; ++i) base_idx[static_cast<std::size_t>(i)] = static_cast<int>(std::floor(c(i) * g));
    std::vector<int> off(static_cast<std::size_t>(d_), -box);
    while (true) {
      Eigen::VectorXd gp(d_);
      std::int64_t flat = 0;
      for (int i = 0; i < d_; ++i) {
        int idx = ((base_idx[static_cast<std::size_t>(i)] + off[static_cast<std::size_t>(i)]) % g + g) % g;
        gp(i) = static_cast<double>(idx) / g;
        flat = flat * g + idx;
      }
      double dist = wrap_diff(c, gp).norm();
      auto& slot = best[static_cast<std::size_t>(flat)];
      if (dist < slot) {
        if (slot > reach && dist <= reach) --uncovered;
        slot = dist;
      }
      int i = 0;
      for (; i < d_; ++i) {
        if (++off[static_cast<std::size_t>(i)] <= box) break;
        off[static_cast<std::size_t>(i)] = -box;
      }
      if (i == d_) break;
    }
    cur = step_rational(cur, 1);
  }
  if (uncovered > 0) {
    double worst = 0.0;
    for (double b : best) worst = std::max(worst, std::min(b, 1.0));
    std::ostringstream os;
    os << "dense_net: " << uncovered << " grid nodes uncovered after " << pts.size()
       << " steps; achieved mesh about " << worst + half_diag;
    fail(ErrorCode::coverage, os.str());
  }
  net.base = pts[0];
  net.orbit_length = static_cast<std::int64_t>(pts.size());
  net.points = std::move(pts);
  net.indices.resize(net.points.size());
  std::iota(net.indices.begin(), net.indices.end(), 0);
  net.mesh = delta;
  net.exact_cover = false;  // empirical: certified through the covering grid
  return net;
}

std::vector<Point> ToralSystem::sample_orbit(std::string_view measure, std::int64_t length,
                                             std::uint64_t seed, std::int64_t) const {
  if (measure != "lebesgue")
    fail(ErrorCode::invalid_argument, "toral: unknown measure id '" + std::string(measure) + "'");
  if (length < 1) fail(ErrorCode::invalid_argument, "sample_orbit: length must be positive");
  Rng rng = make_rng(seed, 0x70a1);
  std::uniform_int_distribution<std::int64_t> num_dist(0, (1LL << 53) - 1);
  RationalCoords rc;
  rc.den = 1LL << 53;
  rc.num.resize(static_cast<std::size_t>(d_));
  for (int i = 0; i < d_; ++i) rc.num[static_cast<std::size_t>(i)] = num_dist(rng);
  std::vector<Point> orbit;
  orbit.reserve(static_cast<std::size_t>(length));
  RationalCoords cur = rc;
  for (std::int64_t i = 0; i < length; ++i) {
    orbit.emplace_back(ToralPoint(cur));
    if (i + 1 < length) cur = step_rational(cur, 1);
  }
  return orbit;
}

std::vector<Point> ToralSystem::sample_points(std::string_view measure, int count, std::int64_t,
                                              std::uint64_t seed, std::int64_t) const {
  if (measure != "lebesgue")
    fail(ErrorCode::invalid_argument, "toral: unknown measure id '" + std::string(measure) + "'");
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(count));
  std::uniform_int_distribution<std::int64_t> num_dist(0, (1LL << 53) - 1);
  for (int i = 0; i < count; ++i) {
    Rng rng = make_rng(seed, 0x70b2 + static_cast<std::uint64_t>(i));
    RationalCoords rc;
    rc.den = 1LL << 53;
    rc.num.resize(static_cast<std::size_t>(d_));
    for (int j = 0; j < d_; ++j) rc.num[static_cast<std::size_t>(j)] = num_dist(rng);
    pts.emplace_back(ToralPoint(rc));
  }
  return pts;
}

// ---------------------------------------------------------------------------

std::shared_ptr<System> make_sft(int alphabet, const Eigen::MatrixXi& transitions,
                                 double metric_base) {
  return std::make_shared<SftSystem>(alphabet, transitions, metric_base);
}

std::shared_ptr<System> make_full_shift(int alphabet) {
  return make_sft(alphabet, Eigen::MatrixXi::Ones(alphabet, alphabet));
}

std::shared_ptr<System> make_golden_mean_shift() {
  Eigen::MatrixXi t(2, 2);
  t << 1, 1, 1, 0;
  return make_sft(2, t);
}

std::shared_ptr<System> make_toral(const Eigen::MatrixXi& l) {
  return std::make_shared<ToralSystem>(l);
}

std::shared_ptr<System> make_cat_map() {
  Eigen::MatrixXi l(2, 2);
  l << 2, 1, 1, 1;
  return make_toral(l);
}

}  // namespace cocyclelab
