#include "cocyclelab/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

namespace cocyclelab {

std::string to_string(PeriodicDataClass c) {
  switch (c) {
    case PeriodicDataClass::trivial: return "trivial";
    case PeriodicDataClass::bounded: return "bounded";
    case PeriodicDataClass::general: return "general";
    default: return "unknown";
  }
}

struct CocycleGenerator::Impl {
  std::shared_ptr<const System> system;
  std::string kind;
  int m = 0;
  double alpha = 1.0;
  std::int64_t radius = 0;
  double cond_cap = 1e12;
  std::function<Matrix(const Point&)> eval;
  PeriodicDataClass declared = PeriodicDataClass::unknown;
  std::function<Matrix(const Point&)> true_transfer;  // may be empty
  std::optional<std::pair<double, double>> exponent_bounds;
};

CocycleGenerator::CocycleGenerator(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

int CocycleGenerator::dim() const { return impl_->m; }
double CocycleGenerator::holder_alpha() const { return impl_->alpha; }
std::int64_t CocycleGenerator::dependence_radius() const { return impl_->radius; }
const System& CocycleGenerator::system() const { return *impl_->system; }
const std::shared_ptr<const System>& CocycleGenerator::system_ptr() const { return impl_->system; }
const std::string& CocycleGenerator::kind() const { return impl_->kind; }
PeriodicDataClass CocycleGenerator::declared_class() const { return impl_->declared; }
bool CocycleGenerator::has_true_transfer() const { return static_cast<bool>(impl_->true_transfer); }

Matrix CocycleGenerator::true_transfer(const Point& x) const {
  if (!has_true_transfer())
    fail(ErrorCode::invalid_argument, "generator has no ground-truth transfer function");
  return impl_->true_transfer(x);
}

std::optional<std::pair<double, double>> CocycleGenerator::true_exponent_bounds() const {
  return impl_->exponent_bounds;
}

Matrix CocycleGenerator::evaluate(const Point& x) const {
  Matrix a = impl_->eval(x);
  if (!a.allFinite()) fail(ErrorCode::internal, "cocycle evaluation produced non-finite entries");
  return a;
}

Matrix CocycleGenerator::evaluate_inverse(const Point& x) const {
  return safe_inverse(evaluate(x), impl_->cond_cap);
}

CocycleValue CocycleGenerator::product(const Point& x, std::int64_t n) const {
  CocycleValue out;
  out.base = x;
  out.steps = n;
  if (n >= 0) {
    ScaledMatrix acc = ScaledMatrix::identity(impl_->m);
    Point cur = x;
    for (std::int64_t i = 0; i < n; ++i) {
      acc.left_multiply(evaluate(cur));
      cur = impl_->system->step(cur, 1);
    }
    out.value = acc;
    return out;
  }
  // A(x, -n) = A(f^{-n} x, n)^{-1}
  Point base = impl_->system->step(x, n);
  ScaledMatrix acc = ScaledMatrix::identity(impl_->m);
  Point cur = base;
  for (std::int64_t i = 0; i < -n; ++i) {
    acc.left_multiply(evaluate(cur));
    cur = impl_->system->step(cur, 1);
  }
  out.value = acc.inverse();
  return out;
}

namespace {

using ImplPtr = std::shared_ptr<CocycleGenerator::Impl>;

ImplPtr new_impl(std::shared_ptr<const System> sys, std::string kind, int m) {
  if (m < 1 || m > 8) fail(ErrorCode::config, "cocycle dimension must be in [1, 8]");
  auto impl = std::make_shared<CocycleGenerator::Impl>();
  impl->system = std::move(sys);
  impl->kind = std::move(kind);
  impl->m = m;
  return impl;
}

// Random matrix with unit spectral norm.
Matrix random_direction(int m, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix h(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) h(i, j) = normal(rng);
  return h / operator_norm(h);
}

double symbol_phase(int symbol, int alphabet) {
  if (alphabet <= 1) return 0.0;
  return 2.0 * static_cast<double>(symbol) / static_cast<double>(alphabet - 1) - 1.0;
}

// Truncation radius: geometric tail below 1e-13 of the full series mass.
std::int64_t series_radius(double alpha, double base) {
  double ratio = std::pow(base, -alpha);
  double j = std::log(1e-13 * (1.0 - ratio) / 2.0) / std::log(ratio);
  return std::max<std::int64_t>(2, static_cast<std::int64_t>(std::ceil(j)));
}

struct SeriesCore {
  // S(x) = amplitude * sum_{|j|<=J} w_j phase(x_j) H_j, with sum w_j = 1.
  std::shared_ptr<const SftSystem> sft;
  std::int64_t radius = 0;
  double alpha = 1.0;
  double amplitude = 0.0;
  std::vector<double> weights;   // index j + radius
  std::vector<Matrix> directions;
  int alphabet = 2;

  Matrix log_value(const Point& x) const {
    const SymbolicPoint& sp = x.symbolic();
    int m = static_cast<int>(directions.front().rows());
    Matrix s = Matrix::Zero(m, m);
    for (std::int64_t j = -radius; j <= radius; ++j)
      s += weights[static_cast<std::size_t>(j + radius)] *
           symbol_phase(sp.coord(j), alphabet) * directions[static_cast<std::size_t>(j + radius)];
    return amplitude * s;
  }
};

SeriesCore make_series_core(const std::shared_ptr<const System>& sys, int m, double alpha,
                            double amplitude, std::uint64_t seed) {
  auto sft = std::dynamic_pointer_cast<const SftSystem>(sys);
  if (!sft) fail(ErrorCode::config, "symbol-series family requires an SFT base system");
  if (!(alpha > 0.0 && alpha <= 1.0)) fail(ErrorCode::config, "holder exponent must be in (0, 1]");
  SeriesCore core;
  core.sft = sft;
  core.alpha = alpha;
  core.amplitude = amplitude;
  core.alphabet = sft->alphabet();
  core.radius = series_radius(alpha, sft->metric_base());
  Rng rng = make_rng(seed, 0xc0c);
  double total = 0.0;
  for (std::int64_t j = -core.radius; j <= core.radius; ++j) {
    double w = std::pow(sft->metric_base(), -alpha * static_cast<double>(std::abs(j)));
    core.weights.push_back(w);
    core.directions.push_back(random_direction(m, rng));
    total += w;
  }
  for (double& w : core.weights) w /= total;
  return core;
}

struct TrigCore {
  // S(x) = amplitude * mean_f [cos(2 pi <k_f, x> + theta_f) H_f]
  std::shared_ptr<const ToralSystem> toral;
  double amplitude = 0.0;
  std::vector<Eigen::VectorXd> freqs;
  std::vector<double> phases;
  std::vector<Matrix> directions;

  Matrix log_value(const Point& x) const {
    Eigen::VectorXd c = toral->coords(x.toral());
    int m = static_cast<int>(directions.front().rows());
    Matrix s = Matrix::Zero(m, m);
    for (std::size_t f = 0; f < freqs.size(); ++f)
      s += std::cos(2.0 * M_PI * freqs[f].dot(c) + phases[f]) * directions[f];
    return (amplitude / static_cast<double>(freqs.size())) * s;
  }
};

TrigCore make_trig_core(const std::shared_ptr<const System>& sys, int m, double amplitude,
                        std::uint64_t seed, int frequencies) {
  auto toral = std::dynamic_pointer_cast<const ToralSystem>(sys);
  if (!toral) fail(ErrorCode::config, "trigonometric family requires a toral base system");
  TrigCore core;
  core.toral = toral;
  core.amplitude = amplitude;
  Rng rng = make_rng(seed, 0x714);
  std::uniform_int_distribution<int> freq_dist(-2, 2);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * M_PI);
  for (int f = 0; f < frequencies; ++f) {
    Eigen::VectorXd k(toral->dim());
    bool nonzero = false;
    do {
      for (int i = 0; i < toral->dim(); ++i) {
        k(i) = freq_dist(rng);
        if (k(i) != 0) nonzero = true;
      }
    } while (!nonzero);
    core.freqs.push_back(k);
    core.phases.push_back(phase_dist(rng));
    core.directions.push_back(random_direction(m, rng));
  }
  return core;
}

MatrixField field_from_log(int m, double alpha, std::int64_t radius,
                           std::function<Matrix(const Point&)> log_value) {
  MatrixField f;
  f.m = m;
  f.alpha = alpha;
  f.radius = radius;
  f.eval = [log_value = std::move(log_value)](const Point& x) {
    return Matrix(log_value(x).exp());
  };
  return f;
}

ImplPtr conjugated_impl(std::shared_ptr<const System> sys, std::string kind, int m,
                        MatrixField c_field, MatrixField core_field,
                        PeriodicDataClass declared) {
  auto impl = new_impl(sys, std::move(kind), m);
  impl->alpha = std::min(c_field.alpha, core_field.alpha);
  impl->radius = std::max(c_field.radius, core_field.radius) + 1;  // +1: C is read at fx
  auto system = impl->system;
  auto c_eval = c_field.eval;
  auto core_eval = core_field.eval;
  impl->eval = [system, c_eval, core_eval](const Point& x) {
    Matrix cx = c_eval(x);
    Matrix cfx = c_eval(system->step(x, 1));
    return Matrix(cfx * core_eval(x) * safe_inverse(cx));
  };
  impl->declared = declared;
  impl->exponent_bounds = std::make_pair(0.0, 0.0);
  return impl;
}

}  // namespace

MatrixField make_constant_field(int m, const Matrix& value) {
  MatrixField f;
  f.m = m;
  f.alpha = 1.0;
  f.radius = 0;
  Matrix v = value;
  f.eval = [v](const Point&) { return v; };
  return f;
}

MatrixField make_series_field(std::shared_ptr<const System> sys, int m, double alpha,
                              double amplitude, std::uint64_t seed) {
  SeriesCore core = make_series_core(sys, m, alpha, amplitude, seed);
  std::int64_t radius = core.radius;
  return field_from_log(m, alpha, radius,
                        [core = std::move(core)](const Point& x) { return core.log_value(x); });
}

MatrixField make_toral_trig_field(std::shared_ptr<const System> sys, int m, double amplitude,
                                  std::uint64_t seed, int frequencies) {
  TrigCore core = make_trig_core(sys, m, amplitude, seed, frequencies);
  return field_from_log(m, 1.0, 0,
                        [core = std::move(core)](const Point& x) { return core.log_value(x); });
}

CocycleGenerator make_constant(std::shared_ptr<const System> sys, const Matrix& m) {
  if (m.rows() != m.cols()) fail(ErrorCode::config, "constant generator requires a square matrix");
  auto impl = new_impl(std::move(sys), "constant", static_cast<int>(m.rows()));
  safe_inverse(m);  // reject singular input up front
  Matrix v = m;
  impl->eval = [v](const Point&) { return v; };
  Vector mods = eigen_moduli(v);
  impl->exponent_bounds = std::make_pair(std::log(mods(0)), std::log(mods(mods.size() - 1)));
  Matrix id = Matrix::Identity(v.rows(), v.cols());
  if ((v - id).cwiseAbs().maxCoeff() == 0.0)
    impl->declared = PeriodicDataClass::trivial;
  else if (operator_norm(v.transpose() * v - id) < 1e-12)
    impl->declared = PeriodicDataClass::bounded;
  else
    impl->declared = PeriodicDataClass::general;
  return CocycleGenerator(impl);
}

CocycleGenerator make_symbol_table(std::shared_ptr<const System> sys,
                                   const std::vector<Matrix>& table) {
  auto sft = std::dynamic_pointer_cast<const SftSystem>(sys);
  if (!sft) fail(ErrorCode::config, "symbol-table generator requires an SFT base system");
  if (static_cast<int>(table.size()) != sft->alphabet())
    fail(ErrorCode::config, "symbol-table generator needs one matrix per symbol");
  int m = static_cast<int>(table.front().rows());
  for (const auto& t : table) {
    if (t.rows() != m || t.cols() != m) fail(ErrorCode::config, "symbol-table matrices must share dimension");
    safe_inverse(t);
  }
  auto impl = new_impl(std::move(sys), "symbol-table", m);
  impl->radius = 0;
  impl->eval = [table](const Point& x) { return table[static_cast<std::size_t>(x.symbolic().coord(0))]; };
  return CocycleGenerator(impl);
}

CocycleGenerator make_holder_series(std::shared_ptr<const System> sys, int m, double alpha,
                                    double amplitude, std::uint64_t seed) {
  SeriesCore core = make_series_core(sys, m, alpha, amplitude, seed);
  auto impl = new_impl(std::move(sys), "random-holder", m);
  impl->alpha = alpha;
  impl->radius = core.radius;
  impl->eval = [core = std::move(core)](const Point& x) { return Matrix(core.log_value(x).exp()); };
  return CocycleGenerator(impl);
}

CocycleGenerator make_toral_smooth(std::shared_ptr<const System> sys, int m, double amplitude,
                                   std::uint64_t seed, int frequencies) {
  TrigCore core = make_trig_core(sys, m, amplitude, seed, frequencies);
  auto impl = new_impl(std::move(sys), "random-holder", m);
  impl->alpha = 1.0;
  impl->radius = 0;
  impl->eval = [core = std::move(core)](const Point& x) { return Matrix(core.log_value(x).exp()); };
  return CocycleGenerator(impl);
}

CocycleGenerator make_coboundary(std::shared_ptr<const System> sys, MatrixField c_true) {
  auto impl = new_impl(sys, "coboundary", c_true.m);
  impl->alpha = c_true.alpha;
  impl->radius = c_true.radius + 1;
  auto system = impl->system;
  auto c_eval = c_true.eval;
  impl->eval = [system, c_eval](const Point& x) {
    return Matrix(c_eval(system->step(x, 1)) * safe_inverse(c_eval(x)));
  };
  impl->true_transfer = c_eval;
  impl->declared = PeriodicDataClass::trivial;
  impl->exponent_bounds = std::make_pair(0.0, 0.0);
  return CocycleGenerator(impl);
}

CocycleGenerator make_conjugated_orthogonal(std::shared_ptr<const System> sys, int m,
                                            double alpha, double c_amplitude,
                                            double r_amplitude, std::uint64_t seed) {
  MatrixField c_field, r_field;
  if (sys->type() == "sft") {
    c_field = make_series_field(sys, m, alpha, c_amplitude, mix_seed(seed, 1));
    SeriesCore rc = make_series_core(sys, m, alpha, r_amplitude, mix_seed(seed, 2));
    for (auto& h : rc.directions) h = 0.5 * (h - h.transpose().eval());
    r_field = field_from_log(m, alpha, rc.radius,
                             [rc = std::move(rc)](const Point& x) { return rc.log_value(x); });
  } else {
    c_field = make_toral_trig_field(sys, m, c_amplitude, mix_seed(seed, 1));
    TrigCore rc = make_trig_core(sys, m, r_amplitude, mix_seed(seed, 2), 3);
    for (auto& h : rc.directions) h = 0.5 * (h - h.transpose().eval());
    r_field = field_from_log(m, 1.0, 0,
                             [rc = std::move(rc)](const Point& x) { return rc.log_value(x); });
  }
  auto impl = conjugated_impl(std::move(sys), "conjugated-orthogonal", m, std::move(c_field),
                              std::move(r_field), PeriodicDataClass::bounded);
  return CocycleGenerator(impl);
}

CocycleGenerator make_conjugated_unipotent(std::shared_ptr<const System> sys, int m,
                                           double alpha, double c_amplitude,
                                           double u_amplitude, std::uint64_t seed) {
  if (m < 2) fail(ErrorCode::config, "unipotent family requires m >= 2");
  MatrixField c_field;
  MatrixField u_field;
  u_field.m = m;
  u_field.alpha = alpha;
  if (sys->type() == "sft") {
    c_field = make_series_field(sys, m, alpha, c_amplitude, mix_seed(seed, 1));
    SeriesCore uc = make_series_core(sys, m, alpha, u_amplitude, mix_seed(seed, 2));
    u_field.radius = uc.radius;
    u_field.eval = [uc = std::move(uc), m](const Point& x) {
      Matrix s = uc.log_value(x);
      Matrix u = Matrix::Identity(m, m);
      u.triangularView<Eigen::StrictlyUpper>() = s.triangularView<Eigen::StrictlyUpper>();
      return u;
    };
  } else {
    c_field = make_toral_trig_field(sys, m, c_amplitude, mix_seed(seed, 1));
    TrigCore uc = make_trig_core(sys, m, u_amplitude, mix_seed(seed, 2), 3);
    u_field.radius = 0;
    u_field.eval = [uc = std::move(uc), m](const Point& x) {
      Matrix s = uc.log_value(x);
      Matrix u = Matrix::Identity(m, m);
      u.triangularView<Eigen::StrictlyUpper>() = s.triangularView<Eigen::StrictlyUpper>();
      return u;
    };
  }
  u_field.alpha = c_field.alpha;
  auto impl = conjugated_impl(std::move(sys), "conjugated-unipotent", m, std::move(c_field),
                              std::move(u_field), PeriodicDataClass::general);
  return CocycleGenerator(impl);
}

CocycleGenerator make_derivative(std::shared_ptr<const System> sys) {
  auto toral = std::dynamic_pointer_cast<const ToralSystem>(sys);
  if (!toral) fail(ErrorCode::config, "derivative cocycle requires a toral base system");
  auto gen = make_constant(sys, toral->matrix().cast<double>());
  return gen;
}

CocycleGenerator make_custom(std::shared_ptr<const System> sys, int m, double alpha,
                             std::int64_t radius, std::function<Matrix(const Point&)> eval,
                             const std::string& kind) {
  auto impl = new_impl(std::move(sys), kind, m);
  impl->alpha = alpha;
  impl->radius = radius;
  impl->eval = std::move(eval);
  return CocycleGenerator(impl);
}

CocycleGenerator make_family(std::shared_ptr<const System> sys, const std::string& kind,
                             const FamilyParams& p) {
  if (kind == "constant-identity")
    return make_constant(std::move(sys), Matrix::Identity(p.m, p.m));
  if (kind == "coboundary") {
    MatrixField c = sys->type() == "sft"
                        ? make_series_field(sys, p.m, p.alpha, p.conjugacy_amplitude, p.seed)
                        : make_toral_trig_field(sys, p.m, p.conjugacy_amplitude, p.seed,
                                                p.frequencies);
    return make_coboundary(std::move(sys), std::move(c));
  }
  if (kind == "conjugated-orthogonal")
    return make_conjugated_orthogonal(std::move(sys), p.m, p.alpha, p.conjugacy_amplitude,
                                      p.amplitude, p.seed);
  if (kind == "conjugated-unipotent")
    return make_conjugated_unipotent(std::move(sys), p.m, p.alpha, p.conjugacy_amplitude,
                                     p.amplitude, p.seed);
  if (kind == "random-holder") {
    if (sys->type() == "sft") return make_holder_series(std::move(sys), p.m, p.alpha, p.amplitude, p.seed);
    return make_toral_smooth(std::move(sys), p.m, p.amplitude, p.seed, p.frequencies);
  }
  if (kind == "derivative") return make_derivative(std::move(sys));
  fail(ErrorCode::config, "unknown cocycle family kind '" + kind + "'");
}

double verify_cocycle_identity(const CocycleGenerator& gen, const Point& x, std::int64_t n,
                               std::int64_t k) {
  CocycleValue lhs = gen.product(x, n + k);
  // A(x, 0) = Id exactly, so a vanishing n or k reduces one side to a
  // bitwise replay of the other
  if (k == 0 || n == 0) return relative_difference(lhs.value, gen.product(x, n + k).value);
  ScaledMatrix rhs = gen.product(gen.system().step(x, k), n).value * gen.product(x, k).value;
  return relative_difference(lhs.value, rhs);
}

namespace {

// Admissible word pair differing (when the graph allows it) exactly at
// radius r: y copies x on |i| < r and is resampled outside.
std::pair<SymbolicPoint, SymbolicPoint> close_symbolic_pair(const SftSystem& sft, std::int64_t w,
                                                            std::int64_t r, Rng& rng) {
  const auto& t = sft.transitions();
  int k = sft.alphabet();
  std::uniform_int_distribution<int> sym(0, k - 1);
  auto successors = [&](int a) {
    std::vector<int> out;
    for (int s = 0; s < k; ++s)
      if (t(a, s)) out.push_back(s);
    return out;
  };
  auto predecessors = [&](int a) {
    std::vector<int> out;
    for (int s = 0; s < k; ++s)
      if (t(s, a)) out.push_back(s);
    return out;
  };
  auto pick = [&](const std::vector<int>& choices, int avoid) {
    std::vector<int> filtered;
    for (int c : choices)
      if (c != avoid) filtered.push_back(c);
    const auto& pool = filtered.empty() ? choices : filtered;
    std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
    return pool[d(rng)];
  };

  std::int64_t len = 2 * w + 1;
  std::vector<int> xw(static_cast<std::size_t>(len));
  // admissible x word via uniform successor choices
  xw[0] = sym(rng);
  for (std::int64_t i = 1; i < len; ++i) {
    auto succ = successors(xw[static_cast<std::size_t>(i - 1)]);
    std::uniform_int_distribution<std::size_t> d(0, succ.size() - 1);
    xw[static_cast<std::size_t>(i)] = succ[d(rng)];
  }
  std::vector<int> yw = xw;
  auto at = [&](std::int64_t i) -> int& { return yw[static_cast<std::size_t>(i + w)]; };
  auto x_at = [&](std::int64_t i) { return xw[static_cast<std::size_t>(i + w)]; };
  if (r == 0) {
    // unconstrained center resample, then both directions
    std::vector<int> all(static_cast<std::size_t>(k));
    for (int s = 0; s < k; ++s) all[static_cast<std::size_t>(s)] = s;
    at(0) = pick(all, x_at(0));
    for (std::int64_t i = 1; i <= w; ++i) at(i) = pick(successors(at(i - 1)), -1);
    for (std::int64_t i = -1; i >= -w; --i) at(i) = pick(predecessors(at(i + 1)), -1);
  } else {
    at(r) = pick(successors(at(r - 1)), x_at(r));
    for (std::int64_t i = r + 1; i <= w; ++i) at(i) = pick(successors(at(i - 1)), -1);
    at(-r) = pick(predecessors(at(-r + 1)), x_at(-r));
    for (std::int64_t i = -r - 1; i >= -w; --i) at(i) = pick(predecessors(at(i + 1)), -1);
  }
  return {SymbolicPoint::window(std::move(xw), -w), SymbolicPoint::window(std::move(yw), -w)};
}

}  // namespace

HolderEstimate estimate_holder(const CocycleGenerator& gen, int pair_count, std::uint64_t seed) {
  if (pair_count < 100)
    fail(ErrorCode::invalid_argument, "estimate_holder: need at least 100 pairs");
  const System& sys = gen.system();
  struct Sample {
    double dist;
    double num;
  };
  std::vector<Sample> samples;

  if (sys.type() == "sft") {
    const auto& sft = dynamic_cast<const SftSystem&>(sys);
    std::int64_t rmax = std::min<std::int64_t>(gen.dependence_radius() + 6, 40);
    std::int64_t w = gen.dependence_radius() + rmax + 2;
    for (int i = 0; i < pair_count; ++i) {
      Rng rng = make_rng(seed, 0x401d + static_cast<std::uint64_t>(i));
      std::int64_t r = static_cast<std::int64_t>(i) % (rmax + 1);
      auto [xp, yp] = close_symbolic_pair(sft, w, r, rng);
      Point x(xp), y(yp);
      double d = sys.distance(x, y);
      if (!(d > 0.0)) continue;
      samples.push_back({d, operator_norm(gen.evaluate(x) - gen.evaluate(y))});
    }
  } else {
    const auto& toral = dynamic_cast<const ToralSystem&>(sys);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < pair_count; ++i) {
      Rng rng = make_rng(seed, 0x401d + static_cast<std::uint64_t>(i));
      Eigen::VectorXd x(toral.dim()), dir(toral.dim());
      for (int j = 0; j < toral.dim(); ++j) x(j) = unif(rng);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (int j = 0; j < toral.dim(); ++j) dir(j) = normal(rng);
      dir /= dir.norm();
      double eta = std::exp(std::log(1e-5) + unif(rng) * (std::log(0.05) - std::log(1e-5)));
      Eigen::VectorXd yc = x + eta * dir;
      for (int j = 0; j < toral.dim(); ++j) yc(j) -= std::floor(yc(j));
      Point px{ToralPoint(Eigen::VectorXd(x))}, py{ToralPoint(std::move(yc))};
      double d = sys.distance(px, py);
      if (!(d > 0.0)) continue;
      samples.push_back({d, operator_norm(gen.evaluate(px) - gen.evaluate(py))});
    }
  }
  if (samples.empty())
    fail(ErrorCode::invalid_argument, "estimate_holder: degenerate sample (no distinct pairs)");

  HolderEstimate est;
  double max_num = 0.0;
  for (const auto& s : samples) max_num = std::max(max_num, s.num);
  if (max_num < 1e-12) {
    est.flat = true;
    est.c_hat = max_num;
    est.pairs_used = static_cast<int>(samples.size());
    return est;
  }
  double zero_level = std::max(1e-13, 1e-10 * max_num);
  std::vector<Sample> active;
  double min_active = std::numeric_limits<double>::max();
  double max_zero_dist = 0.0;
  bool any_zero = false;
  for (const auto& s : samples) {
    if (s.num > zero_level) {
      active.push_back(s);
      min_active = std::min(min_active, s.dist);
    } else {
      any_zero = true;
      max_zero_dist = std::max(max_zero_dist, s.dist);
    }
  }
  est.pairs_used = static_cast<int>(active.size());
  est.smallest_active_scale = min_active;
  est.locally_constant = any_zero && !active.empty() && max_zero_dist < min_active;

  double lo = std::numeric_limits<double>::max(), hi = 0.0;
  for (const auto& s : active) {
    lo = std::min(lo, s.dist);
    hi = std::max(hi, s.dist);
  }
  if (active.size() < 8 || hi / lo < 4.0) {
    est.narrow = true;
    est.alpha_hat = gen.holder_alpha();
    double c = 0.0;
    for (const auto& s : active) c = std::max(c, s.num / std::pow(s.dist, est.alpha_hat));
    est.c_hat = c;
    return est;
  }
  // OLS of log num against log dist
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& s : active) {
    double lx = std::log(s.dist), ly = std::log(s.num);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double n = static_cast<double>(active.size());
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double intercept = (sy - slope * sx) / n;
  est.alpha_hat = slope;
  est.c_hat = std::exp(intercept);
  double sse = 0.0;
  for (const auto& s : active) {
    double res = std::log(s.num) - (intercept + slope * std::log(s.dist));
    sse += res * res;
  }
  double var = sse / std::max(1.0, n - 2.0);
  est.alpha_stderr = std::sqrt(var / (sxx - sx * sx / n));
  return est;
}

}  // namespace cocyclelab
