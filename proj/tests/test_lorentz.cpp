#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "haegan/error.hpp"
#include "haegan/lorentz.hpp"
#include "support.hpp"

using namespace haegan::lorentz;
using testsupport::max_abs_diff;
using testsupport::random_point;
using testsupport::random_tangent;

namespace {
const Curvature kNeg1(-1.0);

LorentzPoint pt(std::vector<double> s) { return LorentzPoint::from_spatial(s, kNeg1); }
}  // namespace

TEST_CASE("curvature must be negative") {
  CHECK_THROWS_AS(Curvature(0.0), haegan::Error);
  CHECK_THROWS_AS(Curvature(1.0), haegan::Error);
  CHECK(Curvature(-0.5).value() == -0.5);
}

TEST_CASE("lorentz inner product by hand") {
  std::vector<double> o{1, 0}, x{std::sqrt(2.0), 1};
  CHECK(lorentz_inner(o, o) == doctest::Approx(-1.0));
  CHECK(lorentz_inner(x, x) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(lorentz_inner(x, o) == doctest::Approx(-std::sqrt(2.0)));
  std::vector<double> bad{1, 2, 3};
  CHECK_THROWS_AS(lorentz_inner(o, bad), haegan::Error);
}

TEST_CASE("lift of spatial coordinates") {
  auto p = lift_spatial(std::vector<double>{3, 4}, kNeg1);
  CHECK(p.time() == doctest::Approx(std::sqrt(26.0)).epsilon(1e-15));
  CHECK(lift_spatial(std::vector<double>{1}, kNeg1).time() == doctest::Approx(std::sqrt(2.0)));
  CHECK(lift_spatial(std::vector<double>{0, 0}, kNeg1) == LorentzPoint::origin(2, kNeg1));
  auto q = lift_spatial(std::vector<double>{1}, Curvature(-4.0));
  CHECK(q.manifold_error() < 1e-12);
}

TEST_CASE("from_coords validates the hyperboloid constraint") {
  CHECK_NOTHROW(LorentzPoint::from_coords(std::vector<double>{std::sqrt(2.0), 1.0}, kNeg1));
  CHECK_THROWS_AS(LorentzPoint::from_coords(std::vector<double>{2.0, 1.0}, kNeg1), haegan::Error);
  CHECK_THROWS_AS(LorentzPoint::from_coords(std::vector<double>{-std::sqrt(2.0), 1.0}, kNeg1), haegan::Error);
}

TEST_CASE("distance examples") {
  auto o = LorentzPoint::origin(1, kNeg1);
  auto y = pt({std::sinh(1.0)});
  CHECK(distance(o, y) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(distance(y, y) == 0.0);
  CHECK(squared_lorentz_distance(o, y) == doctest::Approx(2 * std::cosh(1.0) - 2).epsilon(1e-12));
  CHECK(squared_lorentz_distance(y, y) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(distance(o, LorentzPoint::origin(1, Curvature(-2.0))), haegan::Error);
}

TEST_CASE("distance symmetric and triangle inequality") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    auto x = random_point(rng, 4), y = random_point(rng, 4), z = random_point(rng, 4);
    CHECK(distance(x, y) == distance(y, x));
    CHECK(squared_lorentz_distance(x, y) == doctest::Approx(squared_lorentz_distance(y, x)).epsilon(1e-12));
    CHECK(distance(x, z) <= distance(x, y) + distance(y, z) + 1e-9);
  }
}

TEST_CASE("exp and log at the origin") {
  auto o = LorentzPoint::origin(1, kNeg1);
  auto e = exp_map(o, TangentVector(o, {0.0, 1.0}));
  CHECK(e.time() == doctest::Approx(std::cosh(1.0)).epsilon(1e-14));
  CHECK(e.spatial()[0] == doctest::Approx(std::sinh(1.0)).epsilon(1e-14));
  auto l = log_map(o, e);
  CHECK(l.components()[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(l.components()[1] == doctest::Approx(1.0).epsilon(1e-12));
  auto z = log_map(e, e);
  for (double c : z.components()) CHECK(c == 0.0);
  CHECK(exp_map(e, TangentVector::zero(e)) == e);
}

TEST_CASE("exp rejects non-tangent vectors") {
  auto x = pt({1.0});
  CHECK_THROWS_AS(TangentVector(x, {1.0, 0.0}), haegan::Error);
}

TEST_CASE("exp/log roundtrip and norm identity") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    auto x = random_point(rng, 3, 3.0);
    auto v = random_tangent(rng, x, 5.0);
    auto back = log_map(x, exp_map(x, v));
    double vn = 0;
    for (double c : v.components()) vn += c * c;
    CHECK(max_abs_diff(back.components(), v.components()) <= 1e-6 * std::max(1.0, std::sqrt(vn)));
    auto y = random_point(rng, 3, 3.0);
    double d = distance(x, y);
    CHECK(log_map(x, y).norm() == doctest::Approx(d).epsilon(1e-7));
  }
}

TEST_CASE("parallel transport") {
  auto o = LorentzPoint::origin(1, kNeg1);
  auto y = pt({std::sinh(1.0)});
  auto v = TangentVector(o, {0.0, 1.0});
  auto w = parallel_transport(o, y, v);
  CHECK(std::abs(lorentz_inner(y.coords(), w.components())) < 1e-12);
  CHECK(w.norm() == doctest::Approx(1.0).epsilon(1e-12));
  // Along a 1-D geodesic the transported unit vector is (sinh 1, cosh 1).
  CHECK(w.components()[0] == doctest::Approx(std::sinh(1.0)).epsilon(1e-12));
  CHECK(w.components()[1] == doctest::Approx(std::cosh(1.0)).epsilon(1e-12));

  auto same = parallel_transport(y, y, w);
  CHECK(max_abs_diff(same.components(), w.components()) < 1e-12);

  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    auto a = random_point(rng, 3, 3.0), b = random_point(rng, 3, 3.0);
    auto u1 = random_tangent(rng, a, 2.0), u2 = random_tangent(rng, a, 2.0);
    auto p1 = parallel_transport(a, b, u1), p2 = parallel_transport(a, b, u2);
    double before = lorentz_inner(u1.components(), u2.components());
    double after = lorentz_inner(p1.components(), p2.components());
    CHECK(std::abs(before - after) <= 1e-8 * std::max(1.0, std::abs(before)));
  }
}

TEST_CASE("geodesic points") {
  auto o = LorentzPoint::origin(1, kNeg1);
  auto y = pt({std::sinh(2.0)});
  auto g = geodesic_point(o, y, 0.25);
  CHECK(g.time() == doctest::Approx(std::cosh(0.5)).epsilon(1e-12));
  CHECK(g.spatial()[0] == doctest::Approx(std::sinh(0.5)).epsilon(1e-12));
  CHECK(max_abs_diff(geodesic_point(o, y, 0.0).coords(), o.coords()) < 1e-12);
  CHECK(max_abs_diff(geodesic_point(o, y, 1.0).coords(), y.coords()) < 1e-7);
  CHECK_THROWS_AS(geodesic_point(o, y, 1.5), haegan::Error);
  CHECK_THROWS_AS(geodesic_point(o, y, -0.1), haegan::Error);

  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    auto a = random_point(rng, 3, 4.0), b = random_point(rng, 3, 4.0);
    double t = std::uniform_real_distribution<double>(0, 1)(rng);
    auto m = geodesic_point(a, b, t);
    CHECK(std::abs(distance(a, m) - t * distance(a, b)) <= 1e-6);
    auto mid = geodesic_point(a, b, 0.5);
    CHECK(std::abs(distance(a, mid) - distance(mid, b)) <= 1e-6);
  }
}

TEST_CASE("e2h") {
  auto o = e2h(std::vector<double>{0.0, 0.0}, kNeg1);
  CHECK(o == LorentzPoint::origin(2, kNeg1));
  auto p = e2h(std::vector<double>{1.0}, kNeg1);
  CHECK(p.time() == doctest::Approx(std::cosh(1.0)));
  CHECK(p.spatial()[0] == doctest::Approx(std::sinh(1.0)));
  auto q = e2h(std::vector<double>{0.6, 0.8}, kNeg1);
  double sn = std::hypot(q.spatial()[0], q.spatial()[1]);
  CHECK(sn == doctest::Approx(std::sinh(1.0)).epsilon(1e-12));
}

TEST_CASE("direct concatenation and split") {
  auto x = LorentzPoint::from_spatial(std::vector<double>{std::sqrt(3.0)}, kNeg1);
  CHECK(x.time() == doctest::Approx(2.0));
  std::vector<LorentzPoint> xs{x, x};
  auto c = direct_concat(xs);
  CHECK(c.time() == doctest::Approx(std::sqrt(7.0)).epsilon(1e-14));
  CHECK(c.spatial()[0] == std::sqrt(3.0));
  CHECK(c.spatial()[1] == std::sqrt(3.0));
  CHECK(std::abs(lorentz_inner(c.coords(), c.coords()) + 1.0) < 1e-12);

  std::vector<std::size_t> dims{1, 1};
  auto parts = direct_split(c, dims);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0] == x);
  CHECK(parts[1] == x);

  std::vector<LorentzPoint> origins{LorentzPoint::origin(2, kNeg1), LorentzPoint::origin(3, kNeg1),
                                    LorentzPoint::origin(1, kNeg1)};
  CHECK(direct_concat(origins) == LorentzPoint::origin(6, kNeg1));
  std::vector<std::size_t> d3{2, 3, 1};
  for (auto& p : direct_split(LorentzPoint::origin(6, kNeg1), d3)) CHECK(p.spatial()[0] == 0.0);

  std::vector<LorentzPoint> mixed{x, LorentzPoint::origin(1, Curvature(-2.0))};
  CHECK_THROWS_AS(direct_concat(mixed), haegan::Error);
  std::vector<std::size_t> wrong{1, 2};
  CHECK_THROWS_AS(direct_split(c, wrong), haegan::Error);
  std::vector<std::size_t> zero{0, 2};
  CHECK_THROWS_AS(direct_split(c, zero), haegan::Error);
}

TEST_CASE("direct split inverts concat exactly") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 1000; ++i) {
    std::vector<LorentzPoint> xs{random_point(rng, 2), random_point(rng, 3), random_point(rng, 1)};
    auto c = direct_concat(xs);
    CHECK(c.manifold_error() <= 1e-9);
    std::vector<std::size_t> dims{2, 3, 1};
    auto back = direct_split(c, dims);
    for (std::size_t k = 0; k < 3; ++k) CHECK(back[k] == xs[k]);
  }
}

TEST_CASE("tangent concatenation") {
  auto x = pt({std::sinh(1.0)});
  std::vector<LorentzPoint> xs{x, x};
  auto c = tangent_concat(xs);
  double r2 = std::sqrt(2.0);
  CHECK(c.time() == doctest::Approx(std::cosh(r2)).epsilon(1e-12));
  CHECK(c.spatial()[0] == doctest::Approx(std::sinh(r2) / r2).epsilon(1e-12));
  CHECK(c.spatial()[1] == doctest::Approx(std::sinh(r2) / r2).epsilon(1e-12));

  std::vector<LorentzPoint> origins{LorentzPoint::origin(2, kNeg1), LorentzPoint::origin(2, kNeg1)};
  CHECK(max_abs_diff(tangent_concat(origins).coords(), LorentzPoint::origin(4, kNeg1).coords()) == 0.0);

  std::mt19937_64 rng(17);
  for (int i = 0; i < 500; ++i) {
    std::vector<LorentzPoint> ys{random_point(rng, 2, 5.0), random_point(rng, 3, 5.0)};
    auto t = tangent_concat(ys);
    CHECK(t.manifold_error() <= 1e-7);
    std::vector<std::size_t> dims{2, 3};
    auto back = tangent_split(t, dims);
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(back[k].manifold_error() <= 1e-9);
      CHECK(max_abs_diff(back[k].coords(), ys[k].coords()) <= 1e-6 * std::max(1.0, ys[k].time()));
    }
  }
}

TEST_CASE("centroid") {
  auto a = pt({std::sinh(1.0)}), b = pt({-std::sinh(1.0)});
  std::vector<LorentzPoint> ab{a, b};
  std::vector<double> w{1.0, 1.0};
  auto c = centroid(ab, w);
  CHECK(c.time() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(c.spatial()[0]) < 1e-14);

  std::vector<LorentzPoint> single{a};
  std::vector<double> one{1.0};
  CHECK(max_abs_diff(centroid(single, one).coords(), a.coords()) < 1e-12);
  std::vector<LorentzPoint> twice{a, a};
  CHECK(max_abs_diff(centroid(twice, w).coords(), a.coords()) < 1e-12);

  std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS_AS(centroid(ab, zero), haegan::Error);
  std::vector<double> negative{1.0, -1.0};
  CHECK_THROWS_AS(centroid(ab, negative), haegan::Error);

  // Centroid under K = -4 also lands on the manifold.
  Curvature k4(-4.0);
  std::vector<LorentzPoint> q{LorentzPoint::from_spatial(std::vector<double>{1.0, 2.0}, k4),
                              LorentzPoint::from_spatial(std::vector<double>{-3.0, 0.5}, k4)};
  std::vector<double> wq{0.3, 2.0};
  CHECK(centroid(q, wq).manifold_error() < 1e-12);
}

TEST_CASE("riemannian gradient is tangent") {
  auto x = pt({0.3, -1.2});
  auto z = riemannian_grad(x, std::vector<double>{0, 0, 0});
  for (double c : z.components()) CHECK(c == 0.0);
  std::mt19937_64 rng(19);
  for (int i = 0; i < 1000; ++i) {
    auto p = random_point(rng, 4, 5.0);
    auto g = testsupport::gaussian(rng, 5);
    auto r = riemannian_grad(p, g);
    CHECK(std::abs(lorentz_inner(p.coords(), r.components())) <= 1e-8 * std::max(1.0, p.time()));
  }
}

TEST_CASE("riemannian gradient matches directional finite differences") {
  // f(x) = <x, a>_E (Euclidean linear function of ambient coordinates)
  std::mt19937_64 rng(23);
  for (int i = 0; i < 50; ++i) {
    auto x = random_point(rng, 3, 2.0);
    auto a = testsupport::gaussian(rng, 4);
    auto f = [&](const LorentzPoint& p) {
      double s = 0;
      for (std::size_t k = 0; k < 4; ++k) s += a[k] * p.coords()[k];
      return s;
    };
    auto g = riemannian_grad(x, a);
    double gn = g.norm();
    if (gn < 1e-6) continue;
    std::vector<double> unit(g.components().begin(), g.components().end());
    for (auto& c : unit) c /= gn;
    TangentVector u(x, unit, 1e-6);
    const double h = 1e-5;
    auto step = [&](double t) {
      std::vector<double> c(unit);
      for (auto& e : c) e *= t;
      return exp_map(x, TangentVector(x, c, 1e-6));
    };
    double fd = (f(step(h)) - f(step(-h))) / (2 * h);
    // Directional derivative along the unit gradient direction equals its norm.
    CHECK(std::abs(fd - gn) <= 1e-4 * std::max(1.0, gn));
  }
}

TEST_CASE("hyperboloid closure of every point-valued op") {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 2000; ++i) {
    auto x = random_point(rng, 5), y = random_point(rng, 5);
    auto v = random_tangent(rng, x, 5.0);
    CHECK(exp_map(x, v).manifold_error() <= 1e-9);
    CHECK(geodesic_point(x, y, 0.3).manifold_error() <= 1e-9);
    CHECK(x.manifold_error() <= 1e-9);
    std::vector<LorentzPoint> xy{x, y};
    std::vector<double> w{0.4, 0.6};
    CHECK(centroid(xy, w).manifold_error() <= 1e-9);
  }
}
