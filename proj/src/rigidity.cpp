#include "cocyclelab/rigidity.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace cocyclelab {

PeriodicDataAudit audit_periodic_data(const CocycleGenerator& gen, int max_period,
                                      double trivial_tol) {
  if (max_period < 1) fail(ErrorCode::invalid_argument, "audit_periodic_data: max_period >= 1");
  const System& sys = gen.system();
  PeriodicDataAudit audit;
  audit.max_period = max_period;
  audit.trivial_tol = trivial_tol;
  audit.chi_min_hat = std::numeric_limits<double>::infinity();
  audit.chi_max_hat = -std::numeric_limits<double>::infinity();

  Matrix id = Matrix::Identity(gen.dim(), gen.dim());
  for (int n = 1; n <= max_period; ++n) {
    for (const auto& pp : sys.enumerate_periodic(n)) {
      if (pp.exact_period != n) continue;  // already seen at its exact period
      CocycleValue val = gen.product(pp.point, n);
      PeriodicOrbitRecord rec;
      rec.p = pp.point;
      rec.period = n;
      rec.power = n;
      rec.dist_id = distance_from_identity(val.value);
      rec.group_dist_id = rec.dist_id + distance_from_identity(val.value.inverse());
      rec.log_norm = val.value.log_norm();
      rec.log_norm_inv = -val.value.log_min_singular();
      rec.eigen_log_moduli = val.value.eigen_log_moduli();
      rec.exponents = rec.eigen_log_moduli / static_cast<double>(n);
      audit.chi_min_hat = std::min(audit.chi_min_hat, rec.exponents.minCoeff());
      audit.chi_max_hat = std::max(audit.chi_max_hat, rec.exponents.maxCoeff());
      audit.records.push_back(std::move(rec));
    }
  }
  if (audit.records.empty()) fail(ErrorCode::internal, "audit: no periodic points found");

  bool trivial = true;
  for (const auto& r : audit.records)
    if (r.dist_id > trivial_tol) trivial = false;
  if (trivial) {
    audit.classification = PeriodicDataClass::trivial;
  } else {
    // Bounded periodic data keeps ||A(p,n)||^{+-1} uniformly bounded, so the
    // discriminator is the growth trend of the log-norm radius across periods
    // (d_G itself keeps winding up long after the norms saturate).
    std::map<int, double> per_period;
    for (const auto& r : audit.records) {
      auto& v = per_period[r.period];
      v = std::max({v, r.log_norm, r.log_norm_inv});
    }
    std::vector<double> by_period;
    for (auto& [n, v] : per_period) by_period.push_back(v);
    std::size_t half = by_period.size() / 2;
    double first = 0.05, second = 0.05;  // floor keeps tiny radii from misreading
    for (std::size_t i = 0; i < by_period.size(); ++i)
      (i < half ? first : second) = std::max(i < half ? first : second, by_period[i]);
    audit.classification = (by_period.size() >= 4 && second > 1.4 * first)
                               ? PeriodicDataClass::general
                               : PeriodicDataClass::bounded;
  }
  audit.note = "heuristic bound, periods <= " + std::to_string(max_period);
  return audit;
}

namespace {

struct ScanAccess {
  // fast distance between orbit positions i and i+n
  std::function<double(std::int64_t, std::int64_t)> dist;
};

}  // namespace

ApproximationResult approximate_exponents_by_periodic(const CocycleGenerator& gen,
                                                      std::string_view measure, double epsilon,
                                                      const ApproximationBudget& budget,
                                                      std::uint64_t seed) {
  if (!(epsilon > 0)) fail(ErrorCode::invalid_argument, "approximate_exponents: epsilon > 0");
  const System& sys = gen.system();
  const ClosingSpec closing = sys.closing();
  ApproximationResult result;

  const std::int64_t scan_len = budget.orbit_length;
  const std::int64_t margin = gen.dependence_radius() + 48;
  std::vector<Point> orbit = sys.sample_orbit(measure, scan_len, seed, margin);
  result.steps_scanned = scan_len;

  // target spectrum from the orbit prefix
  std::int64_t spec_len = std::min(budget.spectrum_length, scan_len);
  std::vector<Point> prefix(orbit.begin(), orbit.begin() + spec_len);
  LyapunovSpectrum target = spectrum_qr(gen, prefix);
  result.target_exponents = target.exponents;

  // scan access: symbol array for shifts, coordinate cache for tori
  ScanAccess access;
  std::vector<std::int8_t> symbols;
  std::vector<Eigen::VectorXd> coords;
  double base = 2.0;
  if (sys.type() == "sft") {
    const auto& sft = dynamic_cast<const SftSystem&>(sys);
    base = sft.metric_base();
    const SymbolicPoint& x0 = orbit[0].symbolic();
    std::int64_t lo = -44, hi = scan_len + 44;
    symbols.resize(static_cast<std::size_t>(hi - lo));
    for (std::int64_t j = lo; j < hi; ++j)
      symbols[static_cast<std::size_t>(j - lo)] = static_cast<std::int8_t>(x0.coord(j));
    access.dist = [&symbols, lo, hi, base](std::int64_t i, std::int64_t n) {
      std::int64_t r = 0;
      while (r <= 42) {
        std::int64_t a1 = i + r, b1 = i + n + r, a2 = i - r, b2 = i + n - r;
        if (a2 < lo || b1 >= hi) break;
        if (symbols[static_cast<std::size_t>(a1 - lo)] != symbols[static_cast<std::size_t>(b1 - lo)] ||
            symbols[static_cast<std::size_t>(a2 - lo)] != symbols[static_cast<std::size_t>(b2 - lo)])
          return std::pow(base, -static_cast<double>(r));
        ++r;
      }
      return std::pow(base, -static_cast<double>(r));
    };
  } else {
    const auto& toral = dynamic_cast<const ToralSystem&>(sys);
    coords.reserve(static_cast<std::size_t>(scan_len));
    for (const auto& p : orbit) coords.push_back(toral.coords(p.toral()));
    access.dist = [&coords](std::int64_t i, std::int64_t n) {
      Eigen::VectorXd d = coords[static_cast<std::size_t>(i)] - coords[static_cast<std::size_t>(i + n)];
      double s = 0.0;
      for (Eigen::Index j = 0; j < d.size(); ++j) {
        double t = d(j) - std::rint(d(j));
        s += t * t;
      }
      return std::sqrt(s);
    };
  }

  int n_cap = budget.max_period;
  if (sys.type() == "toral")
    n_cap = static_cast<int>(std::min<std::int64_t>(
        n_cap, dynamic_cast<const ToralSystem&>(sys).pseudo_return_cap()));
  std::vector<double> record(static_cast<std::size_t>(n_cap + 1), closing.delta0);

  int candidates = 0;
  for (std::int64_t i = 0; i + n_cap < scan_len && candidates < budget.max_candidates; ++i) {
    for (int n = 1; n <= n_cap; ++n) {
      double d = access.dist(i, n);
      if (!(d < record[static_cast<std::size_t>(n)])) continue;
      record[static_cast<std::size_t>(n)] = d;
      ++candidates;
      ++result.returns_examined;
      ShadowingTriple triple = sys.close_pseudo_return(orbit[static_cast<std::size_t>(i)], n);
      LyapunovSpectrum ps = periodic_spectrum(gen, triple.p, n);
      Vector gaps = (ps.exponents - target.exponents).cwiseAbs();
      double max_gap = gaps.maxCoeff();
      if (max_gap < result.best_max_gap) {
        result.best_max_gap = max_gap;
        result.gaps = gaps;
        result.periodic_exponents = ps.exponents;
        result.p = triple.p;
        result.period = static_cast<int>(n);
        result.delta_achieved = d;
      }
      if (max_gap < epsilon) {
        result.success = true;
        result.steps_scanned = i;
        return result;
      }
      if (candidates >= budget.max_candidates) break;
    }
  }
  return result;
}

GrowthBoundReport verify_growth_bound(const CocycleGenerator& gen, double chi_min, double chi_max,
                                      double epsilon, const SampleSpec& spec,
                                      std::string_view measure, int workers) {
  GrowthBoundReport rep;
  rep.epsilon = epsilon;
  rep.chi_min = chi_min;
  rep.chi_max = chi_max;
  rep.samples = spec.points;
  rep.n_max = spec.n_max;
  const System& sys = gen.system();
  std::vector<Point> pts = sys.sample_points(measure, spec.points, spec.n_max,
                                             spec.seed, gen.dependence_radius() + 2);

  auto walk = [&](std::size_t idx) {
    std::vector<double> margins(static_cast<std::size_t>(spec.n_max), 0.0);
    ScaledMatrix acc = ScaledMatrix::identity(gen.dim());
    Point cur = pts[idx];
    for (int n = 1; n <= spec.n_max; ++n) {
      acc.left_multiply(gen.evaluate(cur));
      cur = sys.step(cur, 1);
      double fwd = acc.log_norm() - static_cast<double>(n) * (chi_max + epsilon);
      double bwd = -acc.log_min_singular() - static_cast<double>(n) * (-chi_min + epsilon);
      margins[static_cast<std::size_t>(n - 1)] = std::max(fwd, bwd);
    }
    return margins;
  };
  auto per_point = parallel_map<std::vector<double>>(pts.size(), workers, walk);

  rep.margin_by_n.assign(static_cast<std::size_t>(spec.n_max), -std::numeric_limits<double>::infinity());
  for (const auto& margins : per_point)
    for (int n = 0; n < spec.n_max; ++n)
      rep.margin_by_n[static_cast<std::size_t>(n)] =
          std::max(rep.margin_by_n[static_cast<std::size_t>(n)], margins[static_cast<std::size_t>(n)]);

  rep.log_c_eps = std::max(0.0, *std::max_element(rep.margin_by_n.begin(), rep.margin_by_n.end()));
  rep.c_eps = std::exp(rep.log_c_eps);
  int half = spec.n_max / 2;
  rep.drift = (rep.margin_by_n.back() - rep.margin_by_n[static_cast<std::size_t>(half - 1)]) /
              static_cast<double>(spec.n_max - half);
  rep.stable = rep.drift < epsilon / 10.0;
  return rep;
}

UniformTimeResult find_uniform_time(const CocycleGenerator& gen, double chi_max, double epsilon,
                                    const SampleSpec& spec, std::string_view measure,
                                    int workers) {
  UniformTimeResult out;
  out.samples = spec.points;
  const System& sys = gen.system();
  std::vector<Point> pts = sys.sample_points(measure, spec.points, spec.n_max,
                                             spec.seed, gen.dependence_radius() + 2);

  // walk every point one step at a time; stop at the first n where
  // a_n(x) < 0 across the whole sample
  struct Walker {
    ScaledMatrix acc;
    Point cur;
  };
  std::vector<Walker> walkers;
  walkers.reserve(pts.size());
  for (const auto& p : pts) walkers.push_back({ScaledMatrix::identity(gen.dim()), p});

  for (int n = 1; n <= spec.n_max; ++n) {
    auto step_one = [&](std::size_t idx) {
      Walker& w = walkers[idx];
      w.acc.left_multiply(gen.evaluate(w.cur));
      w.cur = sys.step(w.cur, 1);
      return w.acc.log_norm() - (chi_max + epsilon) * static_cast<double>(n);
    };
    auto a_vals = parallel_map<double>(walkers.size(), workers, step_one);
    double worst = *std::max_element(a_vals.begin(), a_vals.end());
    out.max_a_by_n.push_back(worst);
    if (worst < 0.0) {
      out.found = true;
      out.n_epsilon = n;
      out.worst_a = worst;
      break;
    }
  }

  // subadditivity (exact up to log-arithmetic) and the inverse-norm relation
  Rng rng = make_rng(spec.seed, 0x3ab);
  std::uniform_int_distribution<int> pick_pt(0, static_cast<int>(pts.size()) - 1);
  int n_hi = out.found ? out.n_epsilon : spec.n_max;
  std::uniform_int_distribution<int> pick_n(1, std::max(1, std::min(n_hi, 24)));
  for (int trial = 0; trial < 32; ++trial) {
    const Point& x = pts[static_cast<std::size_t>(pick_pt(rng))];
    int n = pick_n(rng), k = pick_n(rng);
    double log_nk = gen.product(x, n + k).value.log_norm();
    double log_n_fk = gen.product(sys.step(x, k), n).value.log_norm();
    double log_k = gen.product(x, k).value.log_norm();
    double c = chi_max + epsilon;
    double a_nk = log_nk - c * (n + k);
    double a_n_fk = log_n_fk - c * n;
    double a_k = log_k - c * k;
    out.subadditivity_residual = std::max(out.subadditivity_residual, a_nk - a_n_fk - a_k);
    // ||A(x,n)|| <= ||A(f^n x, k)^{-1}|| ||A(x,n+k)||, the inequality behind
    // the b_k relation (b_k absorbs the (chi+eps)k offset)
    double log_n = gen.product(x, n).value.log_norm();
    double log_binv = -gen.product(sys.step(x, n), k).value.log_min_singular();
    out.b_relation_residual = std::max(out.b_relation_residual, log_n - log_binv - log_nk);
  }
  return out;
}

ShadowingResidual shadowing_residual(const CocycleGenerator& gen, const ShadowingTriple& triple,
                                     double egrow_epsilon) {
  ShadowingResidual out;
  out.egrow_epsilon = egrow_epsilon;
  ScaledMatrix ap = gen.product(triple.p, triple.n).value;
  ScaledMatrix ay = gen.product(triple.y, triple.n).value;
  ScaledMatrix ax = gen.product(triple.x, triple.n).value;
  if (bit_equal(ap, ay) && bit_equal(ax, ay)) {
    out.exact_zero = true;  // identical multiply sequences: residual is 0 analytically
    return out;
  }
  out.residual_stable = distance_from_identity(ap.inverse() * ay);
  out.residual_unstable = distance_from_identity(ax * ay.inverse());

  // empirical subexponential-growth constant along the triple
  double log_c = -std::numeric_limits<double>::infinity();
  for (const Point* base : {&triple.x, &triple.p, &triple.y}) {
    ScaledMatrix acc = ScaledMatrix::identity(gen.dim());
    Point cur = *base;
    for (std::int64_t i = 1; i <= triple.n; ++i) {
      acc.left_multiply(gen.evaluate(cur));
      cur = gen.system().step(cur, 1);
      double e = egrow_epsilon * static_cast<double>(i);
      log_c = std::max(log_c, acc.log_norm() - e);
      log_c = std::max(log_c, -acc.log_min_singular() - e);
    }
  }
  out.egrow_log_c = std::max(log_c, 0.0);
  return out;
}

ShadowingTriple engineered_pseudo_return(const SftSystem& sft, int radius, std::int64_t n,
                                         std::int64_t margin, std::uint64_t seed) {
  if (radius < 2) fail(ErrorCode::invalid_argument, "engineered_pseudo_return: radius >= 2");
  if (n < 1) fail(ErrorCode::invalid_argument, "engineered_pseudo_return: n >= 1");
  const auto& t = sft.transitions();
  int k = sft.alphabet();
  Rng rng = make_rng(seed, 0xe17);
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

  // cyclic base word (admissible wrap) found by rejection
  std::vector<int> w(static_cast<std::size_t>(n));
  for (int attempt = 0; attempt < 4096; ++attempt) {
    std::uniform_int_distribution<int> sym(0, k - 1);
    w[0] = sym(rng);
    bool ok = true;
    for (std::int64_t i = 1; i < n; ++i) {
      auto succ = successors(w[static_cast<std::size_t>(i - 1)]);
      std::uniform_int_distribution<std::size_t> d(0, succ.size() - 1);
      w[static_cast<std::size_t>(i)] = succ[d(rng)];
    }
    if (t(w[static_cast<std::size_t>(n - 1)], w[0])) {
      ok = true;
    } else {
      ok = false;
    }
    if (ok) break;
    if (attempt == 4095)
      fail(ErrorCode::internal, "engineered_pseudo_return: no admissible cyclic word found");
  }
  auto wmod = [&](std::int64_t i) {
    std::int64_t r = i % n;
    if (r < 0) r += n;
    return w[static_cast<std::size_t>(r)];
  };

  std::int64_t lo = -(margin + radius), hi = n + radius + margin;
  std::vector<int> word(static_cast<std::size_t>(hi - lo + 1));
  auto at = [&](std::int64_t i) -> int& { return word[static_cast<std::size_t>(i - lo)]; };
  for (std::int64_t i = -(radius - 1); i <= n + radius - 1; ++i) at(i) = wmod(i);
  // mismatches at the ends of the periodic patch
  at(n + radius) = pick(successors(at(n + radius - 1)), wmod(radius));
  for (std::int64_t i = n + radius + 1; i <= hi; ++i) at(i) = pick(successors(at(i - 1)), -1);
  at(-radius) = pick(predecessors(at(-radius + 1)), wmod(n - radius));
  for (std::int64_t i = -radius - 1; i >= lo; --i) at(i) = pick(predecessors(at(i + 1)), -1);

  SymbolicPoint x = SymbolicPoint::window(std::move(word), lo);
  return sft.close_pseudo_return(Point(x), n);
}

BoundednessAudit boundedness_audit(const CocycleGenerator& gen, int orbit_count,
                                   std::int64_t n_max, std::uint64_t seed,
                                   std::string_view measure, double plateau_frac, int workers) {
  BoundednessAudit audit;
  audit.orbits = orbit_count;
  audit.n_max = n_max;
  const System& sys = gen.system();
  std::int64_t stride = std::max<std::int64_t>(1, n_max / 256);

  auto walk = [&](std::size_t idx) {
    std::vector<Point> orbit =
        sys.sample_orbit(measure, 1, mix_seed(seed, idx), gen.dependence_radius() + 2 + n_max);
    Point cur = orbit[0];
    ScaledMatrix fwd = ScaledMatrix::identity(gen.dim());
    ScaledMatrix inv = ScaledMatrix::identity(gen.dim());
    std::vector<double> sup_at;
    double running = -std::numeric_limits<double>::infinity();
    for (std::int64_t n = 1; n <= n_max; ++n) {
      Matrix a = gen.evaluate(cur);
      fwd.left_multiply(a);
      inv.right_multiply(safe_inverse(a));
      cur = sys.step(cur, 1);
      running = std::max(running, log_group_distance_from_identity(fwd, inv));
      if (n % stride == 0 || n == n_max) sup_at.push_back(running);
    }
    return sup_at;
  };
  auto per_orbit = parallel_map<std::vector<double>>(static_cast<std::size_t>(orbit_count),
                                                     workers, walk);
  std::size_t checkpoints = per_orbit.front().size();
  audit.log_sup_by_n.assign(checkpoints, -std::numeric_limits<double>::infinity());
  for (const auto& sup_at : per_orbit)
    for (std::size_t c = 0; c < checkpoints; ++c)
      audit.log_sup_by_n[c] = std::max(audit.log_sup_by_n[c], sup_at[c]);
  for (std::int64_t n = stride; n <= n_max; n += stride) audit.checkpoint_n.push_back(n);
  if (audit.checkpoint_n.size() < checkpoints) audit.checkpoint_n.push_back(n_max);

  audit.final_log_sup = audit.log_sup_by_n.back();
  double half_log_sup = audit.log_sup_by_n[checkpoints / 2];
  audit.trailing_increase = std::exp(audit.final_log_sup - half_log_sup) - 1.0;
  if (!std::isfinite(audit.final_log_sup) && !std::isfinite(half_log_sup))
    audit.trailing_increase = 0.0;  // identically zero distance (identity cocycle)
  audit.bounded = audit.trailing_increase < plateau_frac;
  return audit;
}

}  // namespace cocyclelab
