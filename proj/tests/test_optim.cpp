#include <cmath>
#include <vector>

#include "doctest.h"
#include "haegan/error.hpp"
#include "haegan/optim.hpp"
#include "support.hpp"

using namespace haegan;
using namespace haegan::nn;
using namespace haegan::optim;
using lorentz::LorentzPoint;

namespace {
const Curvature kNeg1(-1.0);

Tensor manifold_param(const LorentzPoint& p) {
  return ad::parameter(1, p.coords().size(), std::vector<double>(p.coords().begin(), p.coords().end()));
}

// d_L(x, target)^2 in the autodiff graph.
Tensor sq_dist(const Tensor& x, const LorentzPoint& target) {
  Tensor t = points_to_rows(std::span<const LorentzPoint>(&target, 1));
  return ad::sum(ad::square(distance_rows(x, t, kNeg1)));
}

double manifold_error(const Tensor& x) {
  auto v = x.values();
  return std::abs(-lorentz::lorentz_inner(v, v) - 1.0);
}
}  // namespace

TEST_CASE("zero gradient leaves parameters unchanged") {
  auto x = manifold_param(LorentzPoint::from_spatial(std::vector<double>{0.3, -0.7}, kNeg1));
  auto w = ad::parameter(1, 2, {1.5, -2.0});
  std::vector<double> x0(x.values().begin(), x.values().end()), w0(w.values().begin(), w.values().end());
  RiemannianAdam opt({{"x", x, true, kNeg1}, {"w", w, false, kNeg1}}, {});
  ad::backward(ad::scale(ad::sum(ad::add(ad::slice_cols(x, 0, 2), w)), 0.0));
  opt.step();
  CHECK(std::vector<double>(x.values().begin(), x.values().end()) == x0);
  CHECK(std::vector<double>(w.values().begin(), w.values().end()) == w0);
}

TEST_CASE("Euclidean branch matches hand-stepped Adam") {
  auto w = ad::parameter(1, 2, {1.0, -2.0});
  AdamOptions o{0.1, 0.9, 0.999, 1e-8};
  RiemannianAdam opt({{"w", w, false, kNeg1}}, o);
  // f(w) = sum(w^2): gradient 2w.
  double ref[2] = {1.0, -2.0}, m[2] = {0, 0}, u[2] = {0, 0};
  for (int t = 1; t <= 3; ++t) {
    opt.zero_grad();
    ad::backward(ad::sum(ad::square(w)));
    opt.step();
    for (int i = 0; i < 2; ++i) {
      double g = 2 * ref[i];
      m[i] = 0.9 * m[i] + 0.1 * g;
      u[i] = 0.999 * u[i] + 0.001 * g * g;
      double mh = m[i] / (1 - std::pow(0.9, t)), uh = u[i] / (1 - std::pow(0.999, t));
      ref[i] -= 0.1 * mh / (std::sqrt(uh) + 1e-8);
    }
    CHECK(std::abs(w.values()[0] - ref[0]) <= 1e-12);
    CHECK(std::abs(w.values()[1] - ref[1]) <= 1e-12);
  }
}

TEST_CASE("single manifold parameter converges to its target") {
  auto target = LorentzPoint::from_spatial(std::vector<double>{0.8, -0.4, 0.2}, kNeg1);
  auto start = LorentzPoint::from_spatial(std::vector<double>{-0.5, 0.6, 0.1}, kNeg1);
  auto x = manifold_param(start);
  RiemannianAdam opt({{"x", x, true, kNeg1}}, {1e-2, 0.9, 0.999, 1e-8});
  double worst = 0.0;
  int steps = 0;
  for (; steps < 500; ++steps) {
    opt.zero_grad();
    ad::backward(sq_dist(x, target));
    opt.step();
    worst = std::max(worst, manifold_error(x));
    if (lorentz::distance(LorentzPoint::from_coords(x.values(), kNeg1, 1e-6), target) < 1e-3) break;
  }
  CHECK(steps < 500);
  CHECK(worst <= 1e-8);
}

TEST_CASE("with zero betas one step is a normalized Riemannian gradient step") {
  auto x0 = LorentzPoint::from_spatial(std::vector<double>{0.2, 0.9}, kNeg1);
  auto target = LorentzPoint::from_spatial(std::vector<double>{-1.0, 0.3}, kNeg1);
  auto x = manifold_param(x0);
  const double lr = 0.05, eps = 1e-8;
  RiemannianAdam opt({{"x", x, true, kNeg1}}, {lr, 0.0, 0.0, eps});
  ad::backward(sq_dist(x, target));
  std::vector<double> eg(x.grad().begin(), x.grad().end());
  opt.step();
  auto g = lorentz::riemannian_grad(x0, eg);
  double gn = g.norm();
  std::vector<double> step(g.components().begin(), g.components().end());
  for (auto& s : step) s *= -lr / (gn + eps);
  auto expect = lorentz::exp_map(x0, lorentz::TangentVector::project(x0, step));
  CHECK(testsupport::max_abs_diff(x.values(), expect.coords()) <= 1e-12);
}

TEST_CASE("first moment stays tangent after transport") {
  auto x = manifold_param(LorentzPoint::from_spatial(std::vector<double>{1.0, 2.0}, kNeg1));
  auto target = LorentzPoint::from_spatial(std::vector<double>{-1.0, 0.0}, kNeg1);
  RiemannianAdam opt({{"x", x, true, kNeg1}}, {0.05, 0.9, 0.999, 1e-8});
  for (int i = 0; i < 20; ++i) {
    opt.zero_grad();
    ad::backward(sq_dist(x, target));
    opt.step();
    CHECK(manifold_error(x) <= 1e-8);
  }
}

TEST_CASE("non-finite gradients abort with the parameter name") {
  auto w = ad::parameter(1, 1, {-1.0});
  RiemannianAdam opt({{"layer.w", w, false, kNeg1}}, {});
  ad::backward(ad::sum(ad::sqrt(w)));
  try {
    opt.step();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numerical);
    CHECK(std::string(e.what()).find("layer.w") != std::string::npos);
  }
  CHECK(w.values()[0] == -1.0);
}

TEST_CASE("StepLR halves the learning rate at the boundary") {
  auto w = ad::parameter(1, 1, {0.0});
  RiemannianAdam opt({{"w", w, false, kNeg1}}, {1.0, 0.9, 0.999, 1e-8});
  StepLR sched(opt, 10, 0.5);
  for (int i = 1; i <= 9; ++i) sched.step();
  CHECK(opt.lr() == 1.0);
  sched.step();
  CHECK(opt.lr() == 0.5);
  for (int i = 0; i < 10; ++i) sched.step();
  CHECK(opt.lr() == 0.25);
}

TEST_CASE("Riemannian SGD decreases the distance") {
  auto target = LorentzPoint::from_spatial(std::vector<double>{0.5, 0.5}, kNeg1);
  auto x = manifold_param(LorentzPoint::origin(2, kNeg1));
  RiemannianSGD opt({{"x", x, true, kNeg1}}, 0.1);
  double before = sq_dist(x, target).item();
  for (int i = 0; i < 10; ++i) {
    opt.zero_grad();
    ad::backward(sq_dist(x, target));
    opt.step();
  }
  CHECK(sq_dist(x, target).item() < before);
  CHECK(manifold_error(x) <= 1e-9);
}
