#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cocyclelab/point.hpp"

namespace cocyclelab {

// Constants of the closing property: near-returns dist(x, f^n x) < delta0 are
// shadowed by a periodic orbit, exponentially delta = c * dist(x, f^n x)
// close with exponent lambda.
struct ClosingSpec {
  double c = 1.0;
  double lambda = 0.0;
  double delta0 = 0.0;
};

struct ShadowingTriple {
  Point x;
  Point p;  // periodic, f^n p = p
  Point y;  // past of x, future of p
  std::int64_t n = 0;
  double delta = 0.0;
};

struct ChainReport {
  double worst_slack = 0.0;  // max over i of lhs/rhs (0/0 counts as 0)
  std::int64_t worst_index = -1;
  bool pass = true;
};

struct ShadowingReport {
  ChainReport traj_xp;      // dist(f^i x, f^i p) <= delta e^{-lambda min(i, n-i)}
  ChainReport stable_py;    // dist(f^i p, f^i y) <= delta e^{-lambda i}
  ChainReport unstable_yx;  // dist(f^i y, f^i x) <= delta e^{-lambda (n-i)}
  bool pass = true;
};

struct PeriodicPoint {
  Point point;
  int exact_period = 0;
};

struct DenseOrbitNet {
  Point base;                         // z
  std::vector<std::int64_t> indices;  // orbit index of each net point
  std::vector<Point> points;
  double mesh = 0.0;    // certified covering radius
  bool exact_cover = false;
  std::int64_t orbit_length = 0;  // net points live on [0, orbit_length)
};

class System {
 public:
  virtual ~System() = default;

  virtual std::string type() const = 0;
  virtual ClosingSpec closing() const = 0;
  virtual double diameter() const = 0;
  // Lipschitz constant of one step of f (used for extension error bounds).
  virtual double step_lipschitz() const = 0;

  virtual Point step(const Point& x, std::int64_t k) const = 0;
  virtual double distance(const Point& a, const Point& b) const = 0;

  // All p with f^n p = p, each with its exact (minimal) period.
  virtual std::vector<PeriodicPoint> enumerate_periodic(int n) const = 0;

  // Requires dist(x, f^n x) < delta0. Returns a triple whose inequality
  // chains hold with the system's ClosingSpec.
  virtual ShadowingTriple close_pseudo_return(const Point& x, std::int64_t n) const = 0;

  virtual DenseOrbitNet dense_net(double delta, std::int64_t max_length) const = 0;

  // Deterministic sample of x, fx, …, f^{length-1}x with x drawn from the
  // named ergodic measure. `margin` widens the defined coordinate window of
  // symbolic points (ignored for toral systems); pass the cocycle dependence
  // radius plus any backward horizon needed.
  virtual std::vector<Point> sample_orbit(std::string_view measure, std::int64_t length,
                                          std::uint64_t seed, std::int64_t margin = 0) const = 0;

  // Independent sample points, each valid on [-margin, horizon + margin].
  virtual std::vector<Point> sample_points(std::string_view measure, int count,
                                           std::int64_t horizon, std::uint64_t seed,
                                           std::int64_t margin = 0) const = 0;

  std::vector<std::string> measures() const { return measure_ids(); }

 protected:
  virtual std::vector<std::string> measure_ids() const = 0;
};

// Evaluates all 3n+3 inequalities of the closing property for the triple.
ShadowingReport verify_shadowing(const System& sys, const ShadowingTriple& t);

class SftSystem : public System {
 public:
  // transition(i, j) == 1 allows symbol j to follow symbol i. The matrix must
  // be primitive; metric dist(x, y) = base^{-min{|i| : x_i != y_i}}.
  SftSystem(int alphabet, Eigen::MatrixXi transitions, double metric_base = 2.0,
            std::int64_t enumeration_cap = 1 << 22, std::int64_t default_margin = 160);

  std::string type() const override { return "sft"; }
  ClosingSpec closing() const override { return closing_; }
  double diameter() const override { return 1.0; }
  double step_lipschitz() const override { return base_; }
  int alphabet() const { return k_; }
  double metric_base() const { return base_; }
  const Eigen::MatrixXi& transitions() const { return trans_; }

  Point step(const Point& x, std::int64_t k) const override;
  double distance(const Point& a, const Point& b) const override;
  std::vector<PeriodicPoint> enumerate_periodic(int n) const override;
  ShadowingTriple close_pseudo_return(const Point& x, std::int64_t n) const override;
  DenseOrbitNet dense_net(double delta, std::int64_t max_length) const override;
  std::vector<Point> sample_orbit(std::string_view measure, std::int64_t length,
                                  std::uint64_t seed, std::int64_t margin = 0) const override;
  std::vector<Point> sample_points(std::string_view measure, int count, std::int64_t horizon,
                                   std::uint64_t seed, std::int64_t margin = 0) const override;

  // Shortest connecting word from symbol a to symbol b (exclusive of both);
  // empty when a -> b is directly admissible.
  std::vector<int> connecting_word(int a, int b) const;

 protected:
  std::vector<std::string> measure_ids() const override { return {"max-entropy"}; }

 private:
  int k_;
  Eigen::MatrixXi trans_;
  double base_;
  std::int64_t enumeration_cap_;
  std::int64_t default_margin_;
  ClosingSpec closing_;
  // Parry (max-entropy) Markov chain
  Eigen::VectorXd parry_initial_;
  Eigen::MatrixXd parry_transition_;  // row-stochastic
  std::vector<std::vector<int>> next_hop_;  // shortest-path next symbol

  std::vector<int> sample_word(std::int64_t len, Rng& rng) const;
};

class ToralSystem : public System {
 public:
  // L: integer matrix with |det| = 1 and no eigenvalue on the unit circle.
  // The closing construction additionally requires real simple eigenvalues
  // (always true for d = 2).
  explicit ToralSystem(Eigen::MatrixXi l);

  std::string type() const override { return "toral"; }
  ClosingSpec closing() const override { return closing_; }
  double diameter() const override;
  double step_lipschitz() const override;
  int dim() const { return d_; }
  const Eigen::MatrixXi& matrix() const { return l_; }
  // Largest n for which close_pseudo_return can represent the periodic point
  // exactly in 64-bit rational arithmetic.
  std::int64_t pseudo_return_cap() const { return period_cap_; }

  Point step(const Point& x, std::int64_t k) const override;
  double distance(const Point& a, const Point& b) const override;
  std::vector<PeriodicPoint> enumerate_periodic(int n) const override;
  ShadowingTriple close_pseudo_return(const Point& x, std::int64_t n) const override;
  DenseOrbitNet dense_net(double delta, std::int64_t max_length) const override;
  std::vector<Point> sample_orbit(std::string_view measure, std::int64_t length,
                                  std::uint64_t seed, std::int64_t margin = 0) const override;
  std::vector<Point> sample_points(std::string_view measure, int count, std::int64_t horizon,
                                   std::uint64_t seed, std::int64_t margin = 0) const override;

  Eigen::VectorXd coords(const ToralPoint& p) const;

 protected:
  std::vector<std::string> measure_ids() const override { return {"lebesgue"}; }

 private:
  int d_;
  Eigen::MatrixXi l_;
  Eigen::MatrixXi l_inv_;  // exact integer inverse (|det| = 1)
  Eigen::VectorXd eigenvalues_;  // real, simple, sorted by |.| descending
  Eigen::MatrixXd eigvec_;       // columns: eigenvectors (unit norm)
  Eigen::MatrixXd eigvec_inv_;
  ClosingSpec closing_;
  std::int64_t period_cap_ = 0;
  std::int64_t enumeration_cap_ = 1 << 22;

  RationalCoords step_rational(const RationalCoords& rc, std::int64_t k) const;
  Eigen::VectorXd wrap_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
  double operator_cond() const;
};

std::shared_ptr<System> make_sft(int alphabet, const Eigen::MatrixXi& transitions,
                                 double metric_base = 2.0);
std::shared_ptr<System> make_full_shift(int alphabet);
std::shared_ptr<System> make_golden_mean_shift();
std::shared_ptr<System> make_toral(const Eigen::MatrixXi& l);
std::shared_ptr<System> make_cat_map();

}  // namespace cocyclelab
