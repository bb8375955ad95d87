#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "haegan/lorentz.hpp"

namespace testsupport {

namespace L = haegan::lorentz;

inline std::vector<double> gaussian(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
  std::normal_distribution<double> nd(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

// Point with spatial norm uniform in [0, max_norm] and a random direction.
inline L::LorentzPoint random_point(std::mt19937_64& rng, std::size_t n, double max_norm = 10.0,
                                    L::Curvature k = L::Curvature(-1.0)) {
  auto s = gaussian(rng, n);
  double nrm = 0.0;
  for (double x : s) nrm += x * x;
  nrm = std::sqrt(nrm);
  double r = std::uniform_real_distribution<double>(0.0, max_norm)(rng);
  for (auto& x : s) x *= r / std::max(nrm, 1e-300);
  return L::LorentzPoint::from_spatial(s, k);
}

// Tangent vector at x with Lorentz norm uniform in [0, max_norm].
inline L::TangentVector random_tangent(std::mt19937_64& rng, const L::LorentzPoint& x, double max_norm = 5.0) {
  auto amb = gaussian(rng, x.dim() + 1);
  auto v = L::TangentVector::project(x, amb);
  double nrm = v.norm();
  double r = std::uniform_real_distribution<double>(0.0, max_norm)(rng);
  std::vector<double> c(v.components().begin(), v.components().end());
  for (auto& e : c) e *= nrm > 0 ? r / nrm : 0.0;
  return L::TangentVector(x, c, 1e-6);
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testsupport
