#pragma once

// Lorentz (hyperboloid) model of hyperbolic space.
//
// A point of L^n_K is stored as n+1 ambient coordinates [time, spatial...] and
// satisfies <x,x>_L = 1/K. The time coordinate is always recomputed from the
// spatial part, so every LorentzPoint is on the manifold up to the rounding of
// one square root.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace haegan::lorentz {

// acosh arguments below this are clamped; denominators are floored at kDivisionGuard.
inline constexpr double kAcoshFloor = 1.0;
inline constexpr double kDivisionGuard = 1e-15;
inline constexpr double kTangentTolerance = 1e-8;
inline constexpr double kManifoldTolerance = 1e-9;

class Curvature {
 public:
  explicit Curvature(double k = -1.0);

  double value() const noexcept { return k_; }
  double sqrt_neg() const noexcept { return std::sqrt(-k_); }

  bool operator==(const Curvature&) const = default;

 private:
  double k_;
};

// -x_t*y_t + x_s.y_s over ambient coordinates.
double lorentz_inner(std::span<const double> x, std::span<const double> y);

class LorentzPoint {
 public:
  static LorentzPoint from_spatial(std::span<const double> spatial, Curvature k);
  static LorentzPoint origin(std::size_t n, Curvature k);
  // Checks |K<x,x>_L - 1| <= tol and x_t > 0, then rebuilds time from the spatial part.
  static LorentzPoint from_coords(std::span<const double> coords, Curvature k,
                                  double tol = kManifoldTolerance);

  double time() const noexcept { return coords_[0]; }
  std::span<const double> spatial() const noexcept { return {coords_.data() + 1, coords_.size() - 1}; }
  std::span<const double> coords() const noexcept { return coords_; }
  std::size_t dim() const noexcept { return coords_.size() - 1; }
  Curvature curvature() const noexcept { return k_; }

  // |K<x,x>_L - 1|
  double manifold_error() const;

  bool operator==(const LorentzPoint&) const = default;

 private:
  LorentzPoint(std::vector<double> coords, Curvature k) : coords_(std::move(coords)), k_(k) {}

  std::vector<double> coords_;
  Curvature k_;
};

// Element of the tangent space T_x L^n_K. Construction checks <base, v>_L = 0.
class TangentVector {
 public:
  TangentVector(LorentzPoint base, std::vector<double> components, double tol = kTangentTolerance);

  static TangentVector zero(const LorentzPoint& base);
  // Orthogonal (Lorentz) projection of an arbitrary ambient vector onto T_base.
  static TangentVector project(const LorentzPoint& base, std::span<const double> ambient);

  const LorentzPoint& base() const noexcept { return base_; }
  std::span<const double> components() const noexcept { return components_; }
  // sqrt(max(<v,v>_L, 0))
  double norm() const;

 private:
  struct Unchecked {};
  TangentVector(Unchecked, LorentzPoint base, std::vector<double> components)
      : base_(std::move(base)), components_(std::move(components)) {}

  LorentzPoint base_;
  std::vector<double> components_;
};

double distance(const LorentzPoint& x, const LorentzPoint& y);
// 2/K - 2<x,y>_L, floored at zero.
double squared_lorentz_distance(const LorentzPoint& x, const LorentzPoint& y);

LorentzPoint lift_spatial(std::span<const double> spatial, Curvature k);

LorentzPoint exp_map(const LorentzPoint& x, const TangentVector& v);
TangentVector log_map(const LorentzPoint& x, const LorentzPoint& y);
TangentVector parallel_transport(const LorentzPoint& x, const LorentzPoint& y, const TangentVector& v);

// exp_x(t * log_x(y)) for t in [0, 1].
LorentzPoint geodesic_point(const LorentzPoint& x, const LorentzPoint& y, double t);

// exp at the origin of [0, t].
LorentzPoint e2h(std::span<const double> t, Curvature k);

LorentzPoint direct_concat(std::span<const LorentzPoint> xs);
std::vector<LorentzPoint> direct_split(const LorentzPoint& x, std::span<const std::size_t> dims);

LorentzPoint tangent_concat(std::span<const LorentzPoint> xs);
std::vector<LorentzPoint> tangent_split(const LorentzPoint& x, std::span<const std::size_t> dims);

// Closed-form weighted centroid; weights must be non-negative with a positive sum.
LorentzPoint centroid(std::span<const LorentzPoint> points, std::span<const double> weights);

// Euclidean gradient (ambient coordinates) to Riemannian gradient at x:
// negate the time entry, then project onto T_x.
TangentVector riemannian_grad(const LorentzPoint& x, std::span<const double> euclid_grad);

}  // namespace haegan::lorentz
