#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "cocyclelab/common.hpp"

namespace cocyclelab {

// ---------------------------------------------------------------------------
// Symbolic points: an immutable backing sequence plus an integer shift, so
// that iterating the shift map is O(1) and orbit points share storage.
// ---------------------------------------------------------------------------

class SymbolicPoint;

namespace detail {
struct PeriodicBacking {
  std::vector<int> word;  // x_i = word[i mod n]
};
struct WindowBacking {
  std::int64_t lo;  // coordinates defined on [lo, lo + word.size())
  std::vector<int> word;
};
struct SpliceBacking;  // past/future pair, defined below SymbolicPoint
using SymbolicBacking =
    std::variant<PeriodicBacking, WindowBacking, std::shared_ptr<const SpliceBacking>>;
}  // namespace detail

class SymbolicPoint {
 public:
  SymbolicPoint() = default;

  static SymbolicPoint periodic(std::vector<int> word);
  static SymbolicPoint window(std::vector<int> word, std::int64_t lo);
  // Coordinates < 0 come from `past`, coordinates >= 0 from `future`.
  static SymbolicPoint splice(const SymbolicPoint& past, const SymbolicPoint& future);

  // Coordinate access; throws window_exhausted outside the defined range.
  int coord(std::int64_t i) const;
  std::optional<int> try_coord(std::int64_t i) const noexcept;

  SymbolicPoint shifted(std::int64_t k) const;

  bool same_representation(const SymbolicPoint& other) const noexcept;
  // Period of the backing word when the point is periodic, 0 otherwise.
  // (The exact period of the sequence may be a divisor.)
  std::int64_t backing_period() const noexcept;

 private:
  std::shared_ptr<const detail::SymbolicBacking> backing_;
  std::int64_t shift_ = 0;
};

namespace detail {
struct SpliceBacking {
  SymbolicPoint past;
  SymbolicPoint future;
};
}  // namespace detail

// First |i| at which the two sequences disagree, scanning outward from 0.
// Returns r and a flag: exact=true means a genuine disagreement (or proven
// equality, signalled by r < 0); exact=false means a window ran out at
// radius r with no disagreement found.
struct DisagreementScan {
  std::int64_t radius = -1;  // -1: proven equal
  bool exact = true;
};
DisagreementScan first_disagreement(const SymbolicPoint& a, const SymbolicPoint& b,
                                    std::int64_t radius_cap = (1 << 22));

// ---------------------------------------------------------------------------
// Toral points. Rational points step exactly under an integer matrix;
// anchored points ride an exact periodic anchor plus an offset stored in
// eigencoordinates, so stable deviations stay accurate down to 1e-300.
// ---------------------------------------------------------------------------

struct RationalCoords {
  std::vector<std::int64_t> num;  // in [0, den)
  std::int64_t den = 1;
  Eigen::VectorXd to_doubles() const;
};

struct AnchoredCoords {
  RationalCoords anchor;
  Eigen::VectorXd eigen_coeffs;  // offset = V * eigen_coeffs, per-step scaling by eigenvalues
};

class ToralPoint {
 public:
  ToralPoint() = default;
  explicit ToralPoint(RationalCoords rc) : rep_(std::move(rc)) {}
  explicit ToralPoint(Eigen::VectorXd real) : rep_(std::move(real)) {}
  explicit ToralPoint(AnchoredCoords ac) : rep_(std::move(ac)) {}

  bool is_rational() const { return std::holds_alternative<RationalCoords>(rep_); }
  bool is_real() const { return std::holds_alternative<Eigen::VectorXd>(rep_); }
  bool is_anchored() const { return std::holds_alternative<AnchoredCoords>(rep_); }

  const RationalCoords& rational() const { return std::get<RationalCoords>(rep_); }
  const Eigen::VectorXd& real() const { return std::get<Eigen::VectorXd>(rep_); }
  const AnchoredCoords& anchored() const { return std::get<AnchoredCoords>(rep_); }

 private:
  std::variant<RationalCoords, Eigen::VectorXd, AnchoredCoords> rep_;
  friend class ToralSystem;
};

class Point {
 public:
  Point() = default;
  Point(SymbolicPoint p) : rep_(std::move(p)) {}
  Point(ToralPoint p) : rep_(std::move(p)) {}

  bool is_symbolic() const { return std::holds_alternative<SymbolicPoint>(rep_); }
  bool is_toral() const { return std::holds_alternative<ToralPoint>(rep_); }
  const SymbolicPoint& symbolic() const;
  const ToralPoint& toral() const;

 private:
  std::variant<std::monostate, SymbolicPoint, ToralPoint> rep_;
};

}  // namespace cocyclelab
