#include "cocyclelab/point.hpp"

#include <algorithm>

namespace cocyclelab {

using detail::PeriodicBacking;
using detail::SpliceBacking;
using detail::SymbolicBacking;
using detail::WindowBacking;

namespace {

std::int64_t positive_mod(std::int64_t a, std::int64_t n) {
  std::int64_t r = a % n;
  return r < 0 ? r + n : r;
}

std::optional<int> backing_coord(const SymbolicBacking& b, std::int64_t i) noexcept {
  if (const auto* p = std::get_if<PeriodicBacking>(&b)) {
    return p->word[static_cast<std::size_t>(positive_mod(i, static_cast<std::int64_t>(p->word.size())))];
  }
  if (const auto* w = std::get_if<WindowBacking>(&b)) {
    if (i < w->lo || i >= w->lo + static_cast<std::int64_t>(w->word.size())) return std::nullopt;
    return w->word[static_cast<std::size_t>(i - w->lo)];
  }
  const auto& s = *std::get<std::shared_ptr<const SpliceBacking>>(b);
  return i < 0 ? s.past.try_coord(i) : s.future.try_coord(i);
}

}  // namespace

SymbolicPoint SymbolicPoint::periodic(std::vector<int> word) {
  if (word.empty()) fail(ErrorCode::invalid_argument, "periodic word must be nonempty");
  SymbolicPoint p;
  p.backing_ = std::make_shared<SymbolicBacking>(PeriodicBacking{std::move(word)});
  return p;
}

SymbolicPoint SymbolicPoint::window(std::vector<int> word, std::int64_t lo) {
  if (word.empty()) fail(ErrorCode::invalid_argument, "window word must be nonempty");
  SymbolicPoint p;
  p.backing_ = std::make_shared<SymbolicBacking>(WindowBacking{lo, std::move(word)});
  return p;
}

SymbolicPoint SymbolicPoint::splice(const SymbolicPoint& past, const SymbolicPoint& future) {
  SymbolicPoint p;
  p.backing_ = std::make_shared<SymbolicBacking>(
      std::make_shared<const SpliceBacking>(SpliceBacking{past, future}));
  return p;
}

int SymbolicPoint::coord(std::int64_t i) const {
  auto c = try_coord(i);
  if (!c)
    fail(ErrorCode::window_exhausted,
         "symbolic coordinate " + std::to_string(i + shift_) + " outside the declared window");
  return *c;
}

std::optional<int> SymbolicPoint::try_coord(std::int64_t i) const noexcept {
  if (!backing_) return std::nullopt;
  return backing_coord(*backing_, i + shift_);
}

SymbolicPoint SymbolicPoint::shifted(std::int64_t k) const {
  SymbolicPoint p = *this;
  p.shift_ += k;
  return p;
}

bool SymbolicPoint::same_representation(const SymbolicPoint& other) const noexcept {
  return backing_ == other.backing_ && shift_ == other.shift_;
}

std::int64_t SymbolicPoint::backing_period() const noexcept {
  if (!backing_) return 0;
  if (const auto* p = std::get_if<PeriodicBacking>(backing_.get()))
    return static_cast<std::int64_t>(p->word.size());
  return 0;
}

DisagreementScan first_disagreement(const SymbolicPoint& a, const SymbolicPoint& b,
                                    std::int64_t radius_cap) {
  if (a.same_representation(b)) return {-1, true};
  // Two periodic sequences agreeing on a window of length >= n_a + n_b agree
  // everywhere (Fine–Wilf), so the scan below terminates with a verdict.
  std::int64_t pa = a.backing_period(), pb = b.backing_period();
  std::int64_t decide_cap = (pa > 0 && pb > 0) ? pa + pb + 1 : radius_cap;
  for (std::int64_t r = 0; r <= radius_cap; ++r) {
    bool any_undefined = false;
    for (std::int64_t i : {r, -r}) {
      if (i == 0 && r != 0) continue;
      auto ca = a.try_coord(i), cb = b.try_coord(i);
      if (ca && cb) {
        if (*ca != *cb) return {r, true};
      } else {
        any_undefined = true;
      }
    }
    if (any_undefined) return {r, false};
    if (pa > 0 && pb > 0 && r >= decide_cap) return {-1, true};
  }
  return {radius_cap, false};
}

Eigen::VectorXd RationalCoords::to_doubles() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(num.size()));
  for (std::size_t i = 0; i < num.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = static_cast<double>(num[i]) / static_cast<double>(den);
  return v;
}

const SymbolicPoint& Point::symbolic() const {
  if (!is_symbolic()) fail(ErrorCode::invalid_argument, "point is not symbolic");
  return std::get<SymbolicPoint>(rep_);
}

const ToralPoint& Point::toral() const {
  if (!is_toral()) fail(ErrorCode::invalid_argument, "point is not toral");
  return std::get<ToralPoint>(rep_);
}

}  // namespace cocyclelab
