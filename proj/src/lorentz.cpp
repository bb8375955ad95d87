#include "haegan/lorentz.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "haegan/error.hpp"

namespace haegan::lorentz {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double euclid_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void require_same_space(const LorentzPoint& x, const LorentzPoint& y, const char* op) {
  if (x.curvature() != y.curvature()) throw invalid_argument(std::string(op) + ": mismatched curvature");
  if (x.dim() != y.dim()) throw invalid_argument(std::string(op) + ": mismatched dimension");
}

void require_base(const LorentzPoint& x, const TangentVector& v, const char* op) {
  if (!(v.base() == x)) throw invalid_argument(std::string(op) + ": tangent vector is not based at x");
}

}  // namespace

Curvature::Curvature(double k) : k_(k) {
  if (!(k < 0.0)) throw invalid_argument("curvature must be strictly negative, got " + std::to_string(k));
}

double lorentz_inner(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw invalid_argument("lorentz_inner: dimension mismatch");
  if (x.size() < 2) throw invalid_argument("lorentz_inner: need at least 2 coordinates");
  double s = -x[0] * y[0];
  for (std::size_t i = 1; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

LorentzPoint LorentzPoint::from_spatial(std::span<const double> spatial, Curvature k) {
  if (spatial.empty()) throw invalid_argument("LorentzPoint needs at least one spatial dimension");
  std::vector<double> coords(spatial.size() + 1);
  coords[0] = std::sqrt(dot(spatial, spatial) - 1.0 / k.value());
  std::copy(spatial.begin(), spatial.end(), coords.begin() + 1);
  return LorentzPoint(std::move(coords), k);
}

LorentzPoint LorentzPoint::origin(std::size_t n, Curvature k) {
  std::vector<double> zeros(n, 0.0);
  return from_spatial(zeros, k);
}

LorentzPoint LorentzPoint::from_coords(std::span<const double> coords, Curvature k, double tol) {
  if (coords.size() < 2) throw invalid_argument("LorentzPoint needs at least 2 coordinates");
  if (!(coords[0] > 0.0)) throw invalid_argument("LorentzPoint time coordinate must be positive");
  const double err = std::abs(k.value() * lorentz_inner(coords, coords) - 1.0);
  if (!(err <= tol)) {
    throw Error(ErrorKind::Invariant, "point is off the hyperboloid: |K<x,x>-1| = " + std::to_string(err));
  }
  return from_spatial(coords.subspan(1), k);
}

double LorentzPoint::manifold_error() const {
  return std::abs(k_.value() * lorentz_inner(coords_, coords_) - 1.0);
}

TangentVector::TangentVector(LorentzPoint base, std::vector<double> components, double tol)
    : base_(std::move(base)), components_(std::move(components)) {
  if (components_.size() != base_.coords().size()) throw invalid_argument("tangent vector dimension mismatch");
  const double scale = std::max(1.0, euclid_norm(base_.coords()) * euclid_norm(components_));
  const double ip = lorentz_inner(base_.coords(), components_);
  if (!(std::abs(ip) <= tol * scale)) {
    throw Error(ErrorKind::Invariant, "vector is not tangent: <x,v>_L = " + std::to_string(ip));
  }
}

TangentVector TangentVector::zero(const LorentzPoint& base) {
  return TangentVector(Unchecked{}, base, std::vector<double>(base.coords().size(), 0.0));
}

TangentVector TangentVector::project(const LorentzPoint& base, std::span<const double> ambient) {
  const auto x = base.coords();
  if (ambient.size() != x.size()) throw invalid_argument("project: dimension mismatch");
  const double c = -base.curvature().value() * lorentz_inner(x, ambient);
  std::vector<double> out(ambient.begin(), ambient.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * x[i];
  return TangentVector(Unchecked{}, base, std::move(out));
}

double TangentVector::norm() const {
  return std::sqrt(std::max(lorentz_inner(components_, components_), 0.0));
}

namespace {

// <x-y, x-y>_L, which equals 2/K - 2<x,y>_L on the manifold but is exactly 0 for x = y.
double difference_norm_sq(const LorentzPoint& x, const LorentzPoint& y) {
  const auto xc = x.coords();
  const auto yc = y.coords();
  double s = -(xc[0] - yc[0]) * (xc[0] - yc[0]);
  for (std::size_t i = 1; i < xc.size(); ++i) s += (xc[i] - yc[i]) * (xc[i] - yc[i]);
  return std::max(s, 0.0);
}

}  // namespace

double distance(const LorentzPoint& x, const LorentzPoint& y) {
  require_same_space(x, y, "distance");
  const Curvature k = x.curvature();
  // acosh(K<x,y>_L) rewritten as 2 asinh(sqrt(-K<x-y,x-y>_L) / 2), which keeps
  // full precision for nearby points.
  const double arg = std::sqrt(-k.value() * difference_norm_sq(x, y)) / 2.0;
  return 2.0 * std::asinh(arg) / k.sqrt_neg();
}

double squared_lorentz_distance(const LorentzPoint& x, const LorentzPoint& y) {
  require_same_space(x, y, "squared_lorentz_distance");
  return difference_norm_sq(x, y);
}

LorentzPoint lift_spatial(std::span<const double> spatial, Curvature k) {
  return LorentzPoint::from_spatial(spatial, k);
}

LorentzPoint exp_map(const LorentzPoint& x, const TangentVector& v) {
  require_base(x, v, "exp_map");
  const double phi = x.curvature().sqrt_neg() * v.norm();
  double c, s_over_phi;
  if (phi < 1e-6) {
    c = 1.0 + 0.5 * phi * phi;
    s_over_phi = 1.0 + phi * phi / 6.0;
  } else {
    c = std::cosh(phi);
    s_over_phi = std::sinh(phi) / phi;
  }
  const auto xs = x.spatial();
  const auto vc = v.components();
  std::vector<double> spatial(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) spatial[i] = c * xs[i] + s_over_phi * vc[i + 1];
  return LorentzPoint::from_spatial(spatial, x.curvature());
}

TangentVector log_map(const LorentzPoint& x, const LorentzPoint& y) {
  require_same_space(x, y, "log_map");
  const Curvature k = x.curvature();
  const double psi = std::max(k.value() * lorentz_inner(x.coords(), y.coords()), kAcoshFloor);
  const auto xc = x.coords();
  const auto yc = y.coords();
  std::vector<double> u(xc.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = yc[i] - psi * xc[i];
  const double u_norm = std::sqrt(std::max(lorentz_inner(u, u), 0.0));
  if (u_norm < kDivisionGuard || psi == kAcoshFloor) return TangentVector::zero(x);
  const double coeff = std::acosh(psi) / k.sqrt_neg() / u_norm;
  for (double& ui : u) ui *= coeff;
  return TangentVector::project(x, u);
}

TangentVector parallel_transport(const LorentzPoint& x, const LorentzPoint& y, const TangentVector& v) {
  require_base(x, v, "parallel_transport");
  require_same_space(x, y, "parallel_transport");
  const auto xc = x.coords();
  const auto yc = y.coords();
  const auto vc = v.components();
  const double denom =
      std::max(-1.0 / x.curvature().value() - lorentz_inner(xc, yc), kDivisionGuard);
  const double coeff = lorentz_inner(yc, vc) / denom;
  std::vector<double> out(vc.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = vc[i] + coeff * (xc[i] + yc[i]);
  return TangentVector::project(y, out);
}

LorentzPoint geodesic_point(const LorentzPoint& x, const LorentzPoint& y, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw invalid_argument("geodesic_point: t must lie in [0, 1]");
  const TangentVector v = log_map(x, y);
  std::vector<double> scaled(v.components().begin(), v.components().end());
  for (double& c : scaled) c *= t;
  return exp_map(x, TangentVector::project(x, scaled));
}

LorentzPoint e2h(std::span<const double> t, Curvature k) {
  const LorentzPoint o = LorentzPoint::origin(t.size(), k);
  std::vector<double> v(t.size() + 1, 0.0);
  std::copy(t.begin(), t.end(), v.begin() + 1);
  return exp_map(o, TangentVector::project(o, v));
}

namespace {

Curvature common_curvature(std::span<const LorentzPoint> xs, const char* op) {
  if (xs.size() < 2) throw invalid_argument(std::string(op) + ": need at least two inputs");
  const Curvature k = xs.front().curvature();
  for (const auto& x : xs) {
    if (x.curvature() != k) throw invalid_argument(std::string(op) + ": mixed curvature");
  }
  return k;
}

void check_dims(std::size_t n, std::span<const std::size_t> dims, const char* op) {
  if (dims.empty()) throw invalid_argument(std::string(op) + ": empty dimension list");
  std::size_t total = 0;
  for (std::size_t d : dims) {
    if (d == 0) throw invalid_argument(std::string(op) + ": split dimensions must be positive");
    total += d;
  }
  if (total != n) throw invalid_argument(std::string(op) + ": split dimensions do not sum to the input dimension");
}

}  // namespace

LorentzPoint direct_concat(std::span<const LorentzPoint> xs) {
  const Curvature k = common_curvature(xs, "direct_concat");
  std::vector<double> spatial;
  for (const auto& x : xs) spatial.insert(spatial.end(), x.spatial().begin(), x.spatial().end());
  return LorentzPoint::from_spatial(spatial, k);
}

std::vector<LorentzPoint> direct_split(const LorentzPoint& x, std::span<const std::size_t> dims) {
  check_dims(x.dim(), dims, "direct_split");
  std::vector<LorentzPoint> out;
  out.reserve(dims.size());
  std::size_t offset = 0;
  for (std::size_t d : dims) {
    out.push_back(LorentzPoint::from_spatial(x.spatial().subspan(offset, d), x.curvature()));
    offset += d;
  }
  return out;
}

LorentzPoint tangent_concat(std::span<const LorentzPoint> xs) {
  const Curvature k = common_curvature(xs, "tangent_concat");
  std::vector<double> spatial;
  for (const auto& x : xs) {
    const TangentVector v = log_map(LorentzPoint::origin(x.dim(), k), x);
    spatial.insert(spatial.end(), v.components().begin() + 1, v.components().end());
  }
  return e2h(spatial, k);
}

std::vector<LorentzPoint> tangent_split(const LorentzPoint& x, std::span<const std::size_t> dims) {
  check_dims(x.dim(), dims, "tangent_split");
  const TangentVector v = log_map(LorentzPoint::origin(x.dim(), x.curvature()), x);
  const auto vs = v.components().subspan(1);
  std::vector<LorentzPoint> out;
  out.reserve(dims.size());
  std::size_t offset = 0;
  for (std::size_t d : dims) {
    out.push_back(e2h(vs.subspan(offset, d), x.curvature()));
    offset += d;
  }
  return out;
}

LorentzPoint centroid(std::span<const LorentzPoint> points, std::span<const double> weights) {
  if (points.empty()) throw invalid_argument("centroid: no points");
  if (points.size() != weights.size()) throw invalid_argument("centroid: weights and points differ in length");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw invalid_argument("centroid: weights must be non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw invalid_argument("centroid: weights sum to zero");
  const Curvature k = points.front().curvature();
  std::vector<double> sum(points.front().coords().size(), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    require_same_space(points.front(), points[i], "centroid");
    const auto c = points[i].coords();
    for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += weights[i] * c[j];
  }
  const double denom = std::max(k.sqrt_neg() * std::sqrt(std::abs(lorentz_inner(sum, sum))), kDivisionGuard);
  std::vector<double> spatial(sum.begin() + 1, sum.end());
  for (double& s : spatial) s /= denom;
  return LorentzPoint::from_spatial(spatial, k);
}

TangentVector riemannian_grad(const LorentzPoint& x, std::span<const double> euclid_grad) {
  if (euclid_grad.size() != x.coords().size()) throw invalid_argument("riemannian_grad: dimension mismatch");
  std::vector<double> h(euclid_grad.begin(), euclid_grad.end());
  h[0] = -h[0];
  return TangentVector::project(x, h);
}

}  // namespace haegan::lorentz
