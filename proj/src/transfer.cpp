#include "cocyclelab/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace cocyclelab {

using nlohmann::json;

struct TransferLookup {
  // SFT: hash of the central word of radius `word_radius` -> slots
  int word_radius = 0;
  std::unordered_map<std::uint64_t, std::vector<int>> word_slots;
  // toral: flat cell -> slots
  int grid = 0;
  std::unordered_map<std::int64_t, std::vector<int>> cell_slots;
};

namespace {

std::uint64_t word_key(const SymbolicPoint& p, int radius, int alphabet) {
  std::uint64_t key = 0;
  for (int j = -radius; j <= radius; ++j)
    key = key * static_cast<std::uint64_t>(alphabet) + static_cast<std::uint64_t>(p.coord(j));
  return key;
}

std::int64_t cell_key(const Eigen::VectorXd& c, int grid) {
  std::int64_t flat = 0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    int idx = static_cast<int>(std::floor(c(i) * grid));
    idx = ((idx % grid) + grid) % grid;
    flat = flat * grid + idx;
  }
  return flat;
}

std::shared_ptr<TransferLookup> build_lookup(const System& sys, const DenseOrbitNet& net) {
  auto lk = std::make_shared<TransferLookup>();
  if (sys.type() == "sft") {
    const auto& sft = dynamic_cast<const SftSystem&>(sys);
    double b = sft.metric_base();
    int radius = std::max(0, static_cast<int>(std::lround(std::log(1.0 / net.mesh) / std::log(b))) - 1);
    double bits = (2.0 * radius + 1.0) * std::log2(static_cast<double>(sft.alphabet()));
    if (bits > 62) fail(ErrorCode::size_limit, "transfer lookup: net word does not fit 64-bit key");
    lk->word_radius = radius;
    for (std::size_t s = 0; s < net.points.size(); ++s)
      lk->word_slots[word_key(net.points[s].symbolic(), radius, sft.alphabet())]
          .push_back(static_cast<int>(s));
  } else {
    const auto& toral = dynamic_cast<const ToralSystem&>(sys);
    int grid = std::max(4, static_cast<int>(std::ceil(2.0 / net.mesh)));
    grid = std::min(grid, 4096);
    lk->grid = grid;
    for (std::size_t s = 0; s < net.points.size(); ++s)
      lk->cell_slots[cell_key(toral.coords(net.points[s].toral()), grid)]
          .push_back(static_cast<int>(s));
  }
  return lk;
}

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  int used = 0;
  bool ok = false;
};

LogLogFit fit_loglog(const std::vector<std::pair<double, double>>& samples) {
  LogLogFit fit;
  double lo = std::numeric_limits<double>::max(), hi = 0.0;
  for (const auto& [d, v] : samples) {
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  if (samples.size() < 8 || hi / lo < 4.0) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [d, v] : samples) {
    double lx = std::log(d), ly = std::log(v);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double n = static_cast<double>(samples.size());
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  double sse = 0.0;
  for (const auto& [d, v] : samples) {
    double r = std::log(v) - (fit.intercept + fit.slope * std::log(d));
    sse += r * r;
  }
  fit.stderr_slope = std::sqrt(sse / std::max(1.0, n - 2.0) / (sxx - sx * sx / n));
  fit.used = static_cast<int>(samples.size());
  fit.ok = true;
  return fit;
}

}  // namespace

TransferFunction build_transfer(const CocycleGenerator& gen, const DenseOrbitNet& net,
                                const TransferGate& gate) {
  const System& sys = gen.system();
  if (net.points.empty()) fail(ErrorCode::invalid_argument, "build_transfer: empty net");
  if (!(net.mesh <= sys.closing().delta0))
    fail(ErrorCode::precondition, "build_transfer: net mesh exceeds delta0");

  PeriodicDataAudit audit = audit_periodic_data(gen, gate.max_period, gate.tol);
  if (audit.classification != PeriodicDataClass::trivial) {
    double worst = 0.0;
    for (const auto& r : audit.records) worst = std::max(worst, r.dist_id);
    std::ostringstream os;
    os << "build_transfer: periodic data is not trivial (classification "
       << to_string(audit.classification) << ", max ||A(p,n) - Id|| = " << worst
       << " over periods <= " << gate.max_period << ", tol " << gate.tol
       << "); the orbit tabulation C(f^n z) = A(z,n) is meaningless for such data";
    fail(ErrorCode::precondition, os.str());
  }

  TransferFunction tf;
  tf.generator = gen;
  tf.net = net;
  tf.values.resize(net.points.size());

  // sequential accumulation along the orbit; net indices are sorted
  std::vector<std::size_t> order(net.indices.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return net.indices[a] < net.indices[b]; });

  ScaledMatrix fwd = ScaledMatrix::identity(gen.dim());
  ScaledMatrix inv = ScaledMatrix::identity(gen.dim());
  Point cur = net.base;
  std::int64_t k = 0;
  double sup_dg = 0.0;
  for (std::size_t oi : order) {
    std::int64_t target = net.indices[oi];
    while (k < target) {
      Matrix a = gen.evaluate(cur);
      fwd.left_multiply(a);
      inv.right_multiply(safe_inverse(a));
      cur = sys.step(cur, 1);
      ++k;
    }
    tf.values[oi] = fwd;
    sup_dg = std::max(sup_dg, distance_from_identity(fwd) + distance_from_identity(inv));
  }
  tf.sup_group_dist_id = sup_dg;
  tf.lookup = build_lookup(sys, net);
  tf.holder = holder_estimate_transfer(tf);
  return tf;
}

TransferEval evaluate_transfer(const TransferFunction& tf, const Point& x) {
  if (tf.net.points.empty()) fail(ErrorCode::invalid_argument, "evaluate_transfer: empty net");
  const System& sys = tf.generator.system();
  const TransferLookup& lk = *tf.lookup;
  std::vector<int> candidates;
  if (sys.type() == "sft") {
    const auto& sft = dynamic_cast<const SftSystem&>(sys);
    auto it = lk.word_slots.find(word_key(x.symbolic(), lk.word_radius, sft.alphabet()));
    if (it != lk.word_slots.end()) candidates = it->second;
  } else {
    const auto& toral = dynamic_cast<const ToralSystem&>(sys);
    Eigen::VectorXd c = toral.coords(x.toral());
    int box = static_cast<int>(std::ceil(tf.net.mesh * lk.grid)) + 1;
    int d = toral.dim();
    std::vector<int> base_idx(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) base_idx[static_cast<std::size_t>(i)] = static_cast<int>(std::floor(c(i) * lk.grid));
    std::vector<int> off(static_cast<std::size_t>(d), -box);
    while (true) {
      std::int64_t flat = 0;
      for (int i = 0; i < d; ++i) {
        int idx = ((base_idx[static_cast<std::size_t>(i)] + off[static_cast<std::size_t>(i)]) % lk.grid + lk.grid) % lk.grid;
        flat = flat * lk.grid + idx;
      }
      auto it = lk.cell_slots.find(flat);
      if (it != lk.cell_slots.end())
        candidates.insert(candidates.end(), it->second.begin(), it->second.end());
      int i = 0;
      for (; i < d; ++i) {
        if (++off[static_cast<std::size_t>(i)] <= box) break;
        off[static_cast<std::size_t>(i)] = -box;
      }
      if (i == d) break;
    }
  }
  if (candidates.empty()) {
    // fall back to a full scan; the net covers X, so this only happens for
    // toral nets when the cell box missed
    candidates.resize(tf.net.points.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i] = static_cast<int>(i);
  }
  int best = -1;
  double best_dist = std::numeric_limits<double>::max();
  for (int s : candidates) {
    double d = sys.distance(x, tf.net.points[static_cast<std::size_t>(s)]);
    std::int64_t idx = tf.net.indices[static_cast<std::size_t>(s)];
    if (d < best_dist ||
        (d == best_dist && best >= 0 && idx < tf.net.indices[static_cast<std::size_t>(best)])) {
      best_dist = d;
      best = s;
    }
  }
  TransferEval out;
  out.value = tf.values[static_cast<std::size_t>(best)].dense();
  out.net_index = tf.net.indices[static_cast<std::size_t>(best)];
  out.dist = best_dist;
  out.error_bound = tf.holder.c_hat * std::pow(tf.net.mesh, tf.holder.alpha_hat);
  return out;
}

CoboundaryResidualReport verify_coboundary(const CocycleGenerator& gen, const TransferFunction& tf,
                                           int samples, std::uint64_t seed) {
  if (!same_generator(gen, tf.generator))
    fail(ErrorCode::invalid_argument, "verify_coboundary: generator mismatch");
  const System& sys = gen.system();
  std::string measure = sys.type() == "sft" ? "max-entropy" : "lebesgue";
  std::int64_t margin = gen.dependence_radius() + tf.lookup->word_radius + 4;
  std::vector<Point> pts = sys.sample_points(measure, samples, 1, seed, margin);

  CoboundaryResidualReport rep;
  rep.samples = samples;
  double total = 0.0;
  for (const auto& x : pts) {
    Point fx = sys.step(x, 1);
    Matrix cx = evaluate_transfer(tf, x).value;
    Matrix cfx = evaluate_transfer(tf, fx).value;
    double r = operator_norm(gen.evaluate(x) - cfx * safe_inverse(cx));
    rep.max_residual = std::max(rep.max_residual, r);
    total += r;
  }
  rep.mean_residual = total / std::max(1, samples);

  // Hölder-based threshold: moving x to its net anchor costs c_A mesh^alpha,
  // and the anchor of fx sits within (1 + Lip_f) mesh of f(anchor of x).
  HolderEstimate gen_est = estimate_holder(gen, 200, mix_seed(seed, 0xabc));
  double c_a = gen_est.flat ? 0.0 : gen_est.c_hat;
  double alpha = gen.holder_alpha();
  double sup_a = 0.0, sup_cinv = 0.0;
  for (std::size_t i = 0; i < tf.values.size(); i += std::max<std::size_t>(1, tf.values.size() / 64)) {
    sup_cinv = std::max(sup_cinv, std::exp(-tf.values[i].log_min_singular()));
    sup_a = std::max(sup_a, operator_norm(gen.evaluate(tf.net.points[i])));
  }
  double c_c = tf.holder.flat ? 0.0 : tf.holder.c_hat;
  double lip = sys.step_lipschitz();
  rep.bound_used = 2.0 * (c_a * std::pow(tf.net.mesh, alpha) +
                          sup_a * sup_cinv * c_c * std::pow((1.0 + lip) * tf.net.mesh, alpha)) +
                   1e-9;
  rep.pass = rep.max_residual <= rep.bound_used;
  return rep;
}

HolderEstimate holder_estimate_transfer(const TransferFunction& tf) {
  const System& sys = tf.generator.system();
  const double delta0 = sys.closing().delta0;
  std::vector<std::pair<double, double>> samples;

  // bucket net slots at several coarseness levels so pair distances spread
  // over multiple scales
  std::size_t n = tf.net.points.size();
  auto add_pair = [&](std::size_t a, std::size_t b) {
    double d = sys.distance(tf.net.points[a], tf.net.points[b]);
    if (!(d > 0.0) || d >= delta0) return;
    Matrix ca = tf.values[a].dense(), cb = tf.values[b].dense();
    double v = operator_norm(ca - cb) + operator_norm(safe_inverse(ca) - safe_inverse(cb));
    if (v > 1e-13) samples.emplace_back(d, v);
  };
  if (sys.type() == "sft") {
    const auto& sft = dynamic_cast<const SftSystem&>(sys);
    int rmax = tf.lookup->word_radius;
    for (int r = 1; r <= rmax && samples.size() < 4000; ++r) {
      std::unordered_map<std::uint64_t, int> first_in_bucket;
      for (std::size_t s = 0; s < n; ++s) {
        std::uint64_t key = word_key(tf.net.points[s].symbolic(), r, sft.alphabet());
        auto [it, fresh] = first_in_bucket.try_emplace(key, static_cast<int>(s));
        if (!fresh) add_pair(static_cast<std::size_t>(it->second), s);
      }
    }
  } else {
    const auto& toral = dynamic_cast<const ToralSystem&>(sys);
    for (int g = 8; g <= tf.lookup->grid && samples.size() < 4000; g *= 2) {
      std::unordered_map<std::int64_t, int> first_in_bucket;
      for (std::size_t s = 0; s < n; ++s) {
        std::int64_t key = cell_key(toral.coords(tf.net.points[s].toral()), g);
        auto [it, fresh] = first_in_bucket.try_emplace(key, static_cast<int>(s));
        if (!fresh) add_pair(static_cast<std::size_t>(it->second), s);
      }
    }
  }

  HolderEstimate est;
  if (samples.empty()) {
    est.flat = true;
    return est;
  }
  LogLogFit fit = fit_loglog(samples);
  est.pairs_used = static_cast<int>(samples.size());
  if (!fit.ok) {
    est.narrow = true;
    est.alpha_hat = tf.generator.holder_alpha();
    for (const auto& [d, v] : samples)
      est.c_hat = std::max(est.c_hat, v / std::pow(d, est.alpha_hat));
    return est;
  }
  est.alpha_hat = fit.slope;
  est.c_hat = std::exp(fit.intercept);
  est.alpha_stderr = fit.stderr_slope;
  double lo = std::numeric_limits<double>::max();
  for (const auto& [d, v] : samples) lo = std::min(lo, d);
  est.smallest_active_scale = lo;
  return est;
}

UniquenessReport uniqueness_check(const TransferFunction& c1, const TransferFunction& c2) {
  if (!same_generator(c1.generator, c2.generator))
    fail(ErrorCode::invalid_argument, "uniqueness_check: transfer functions of different generators");
  int m = c1.generator.dim();
  UniquenessReport rep;
  Matrix sum = Matrix::Zero(m, m);
  std::vector<Matrix> devs;
  std::size_t stride = std::max<std::size_t>(1, c1.net.points.size() / 512);
  std::vector<Matrix> ds;
  for (std::size_t s = 0; s < c1.net.points.size(); s += stride) {
    Matrix c1u = c1.values[s].dense();
    Matrix c2u = evaluate_transfer(c2, c1.net.points[s]).value;
    ds.push_back(safe_inverse(c1u) * c2u);
    sum += ds.back();
  }
  rep.b_estimate = sum / static_cast<double>(ds.size());
  for (const auto& d : ds) rep.max_deviation = std::max(rep.max_deviation, operator_norm(d - rep.b_estimate));
  double e1 = c1.holder.c_hat * std::pow(c1.net.mesh, c1.holder.alpha_hat);
  double e2 = c2.holder.c_hat * std::pow(c2.net.mesh, c2.holder.alpha_hat);
  rep.tol = 2.0 * (e1 + e2) + 1e-9;
  rep.pass = rep.max_deviation <= rep.tol;
  return rep;
}

SubgroupReport subgroup_check(const TransferFunction& tf, std::string_view predicate) {
  const int m = tf.generator.dim();
  Matrix id = Matrix::Identity(m, m);
  Matrix j;
  std::function<double(const Matrix&, double)> defect;
  if (predicate == "special-linear") {
    defect = [](const Matrix& c, double log_det) { return std::abs(std::expm1(log_det)); };
  } else if (predicate == "orthogonal") {
    defect = [id](const Matrix& c, double) { return operator_norm(c.transpose() * c - id); };
  } else if (predicate == "symplectic") {
    if (m % 2 != 0) fail(ErrorCode::invalid_argument, "symplectic predicate needs even dimension");
    j = Matrix::Zero(m, m);
    j.topRightCorner(m / 2, m / 2) = Matrix::Identity(m / 2, m / 2);
    j.bottomLeftCorner(m / 2, m / 2) = -Matrix::Identity(m / 2, m / 2);
    defect = [j](const Matrix& c, double) { return operator_norm(c.transpose() * j * c - j); };
  } else {
    fail(ErrorCode::invalid_argument, "unknown subgroup predicate '" + std::string(predicate) + "'");
  }

  SubgroupReport rep;
  std::size_t stride = std::max<std::size_t>(1, tf.net.points.size() / 256);
  for (std::size_t s = 0; s < tf.net.points.size(); s += stride) {
    Matrix a = tf.generator.evaluate(tf.net.points[s]);
    double log_det_a = 0.0;
    if (predicate == "special-linear") {
      Eigen::PartialPivLU<Matrix> lu(a);
      for (int i = 0; i < m; ++i) log_det_a += std::log(std::abs(lu.matrixLU()(i, i)));
    }
    rep.generator_defect = std::max(rep.generator_defect, defect(a, log_det_a));
  }
  rep.applicable = rep.generator_defect <= 1e-8;

  for (std::size_t s = 0; s < tf.values.size(); ++s) {
    const ScaledMatrix& c = tf.values[s];
    double d = defect(c.dense(), c.log_abs_det());
    rep.max_defect = std::max(rep.max_defect, d);
    double roundoff = std::max<double>(1.0, static_cast<double>(std::abs(tf.net.indices[s]))) * 1e-12;
    if (rep.applicable && d > roundoff) ++rep.violations;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_transfer(const TransferFunction& tf, const std::string& json_path,
                   const std::string& csv_path) {
  const System& sys = tf.generator.system();
  json meta;
  meta["format"] = "cocyclelab-transfer";
  meta["version"] = kVersion;
  meta["system_type"] = sys.type();
  meta["mesh"] = tf.net.mesh;
  meta["exact_cover"] = tf.net.exact_cover;
  meta["orbit_length"] = tf.net.orbit_length;
  meta["sup_group_dist_id"] = tf.sup_group_dist_id;
  meta["holder"] = {{"alpha_hat", tf.holder.alpha_hat},
                    {"c_hat", tf.holder.c_hat},
                    {"flat", tf.holder.flat},
                    {"narrow", tf.holder.narrow}};
  if (sys.type() == "sft") {
    const SymbolicPoint& z = tf.net.base.symbolic();
    std::int64_t period = z.backing_period();
    std::vector<int> word(static_cast<std::size_t>(period));
    for (std::int64_t i = 0; i < period; ++i) word[static_cast<std::size_t>(i)] = z.coord(i);
    meta["base_word"] = word;
  }
  std::ofstream jf(json_path);
  if (!jf) fail(ErrorCode::io, "save_transfer: cannot write " + json_path);
  jf << meta.dump(2) << "\n";

  std::ofstream cf(csv_path);
  if (!cf) fail(ErrorCode::io, "save_transfer: cannot write " + csv_path);
  cf << "# cocycle-lab " << kVersion << " transfer\n";
  int m = tf.generator.dim();
  cf << "slot,orbit_index,log_scale";
  if (sys.type() == "toral") {
    int d = dynamic_cast<const ToralSystem&>(sys).dim();
    for (int i = 0; i < d; ++i) cf << ",num" << i;
    cf << ",den";
  }
  for (int i = 0; i < m; ++i)
    for (int c = 0; c < m; ++c) cf << ",u" << i << "_" << c;
  cf << "\n";
  for (std::size_t s = 0; s < tf.values.size(); ++s) {
    cf << s << "," << tf.net.indices[s] << "," << fmt17(tf.values[s].log_scale());
    if (sys.type() == "toral") {
      const auto& rc = tf.net.points[s].toral().rational();
      for (auto v : rc.num) cf << "," << v;
      cf << "," << rc.den;
    }
    const Matrix& u = tf.values[s].unit();
    for (int i = 0; i < m; ++i)
      for (int c = 0; c < m; ++c) cf << "," << fmt17(u(i, c));
    cf << "\n";
  }
}

TransferFunction load_transfer(const CocycleGenerator& gen, const std::string& json_path,
                               const std::string& csv_path) {
  std::ifstream jf(json_path);
  if (!jf) fail(ErrorCode::io, "load_transfer: cannot read " + json_path);
  json meta = json::parse(jf, nullptr, true);
  if (meta.value("format", "") != "cocyclelab-transfer")
    fail(ErrorCode::io, "load_transfer: not a transfer bundle");
  const System& sys = gen.system();
  if (meta.value("system_type", "") != sys.type())
    fail(ErrorCode::io, "load_transfer: system type mismatch");

  TransferFunction tf;
  tf.generator = gen;
  tf.net.mesh = meta["mesh"].get<double>();
  tf.net.exact_cover = meta["exact_cover"].get<bool>();
  tf.net.orbit_length = meta["orbit_length"].get<std::int64_t>();
  tf.sup_group_dist_id = meta["sup_group_dist_id"].get<double>();
  tf.holder.alpha_hat = meta["holder"]["alpha_hat"].get<double>();
  tf.holder.c_hat = meta["holder"]["c_hat"].get<double>();
  tf.holder.flat = meta["holder"]["flat"].get<bool>();
  tf.holder.narrow = meta["holder"]["narrow"].get<bool>();

  SymbolicPoint z;
  if (sys.type() == "sft") {
    std::vector<int> word = meta["base_word"].get<std::vector<int>>();
    z = SymbolicPoint::periodic(word);
    tf.net.base = Point(z);
  }

  std::ifstream cf(csv_path);
  if (!cf) fail(ErrorCode::io, "load_transfer: cannot read " + csv_path);
  std::string line;
  int m = gen.dim();
  while (std::getline(cf, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("slot,", 0) == 0) continue;
    std::stringstream ss(line);
    std::string tok;
    auto next = [&]() {
      if (!std::getline(ss, tok, ',')) fail(ErrorCode::io, "load_transfer: short row");
      return tok;
    };
    next();  // slot
    std::int64_t idx = std::stoll(next());
    double log_scale = std::strtod(next().c_str(), nullptr);
    Point pt;
    if (sys.type() == "sft") {
      pt = Point(z.shifted(idx));
    } else {
      const auto& toral = dynamic_cast<const ToralSystem&>(sys);
      RationalCoords rc;
      rc.num.resize(static_cast<std::size_t>(toral.dim()));
      for (int i = 0; i < toral.dim(); ++i) rc.num[static_cast<std::size_t>(i)] = std::stoll(next());
      rc.den = std::stoll(next());
      pt = Point(ToralPoint(rc));
    }
    Matrix u(m, m);
    for (int i = 0; i < m; ++i)
      for (int c = 0; c < m; ++c) u(i, c) = std::strtod(next().c_str(), nullptr);
    tf.values.push_back(ScaledMatrix::from_parts(u, log_scale));
    tf.net.points.push_back(pt);
    tf.net.indices.push_back(idx);
  }
  if (sys.type() == "toral" && !tf.net.points.empty()) tf.net.base = tf.net.points.front();
  tf.lookup = build_lookup(sys, tf.net);
  return tf;
}

}  // namespace cocyclelab
