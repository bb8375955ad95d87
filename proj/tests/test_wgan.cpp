#include <cmath>
#include <vector>

#include "doctest.h"
#include "haegan/error.hpp"
#include "haegan/wgan.hpp"
#include "support.hpp"

using namespace haegan;
using namespace haegan::gan;
using lorentz::LorentzPoint;

namespace {

const Curvature kNeg1(-1.0);

GanConfig small_config() {
  GanConfig c;
  c.latent_dim = 4;
  c.hidden_dim = 8;
  c.depth_gen = 2;
  c.output_dim = 2;
  c.critic_hidden_dim = 8;
  c.depth_critic = 2;
  c.batch_size = 16;
  c.epochs = 1;
  c.lr = 1e-3;
  return c;
}

// Points whose first spatial coordinate is at least 1, so every geodesic between
// two of them stays well away from the origin.
Tensor far_rows(Rng& rng, std::size_t n) {
  std::uniform_real_distribution<double> a(1.0, 3.0), b(-2.0, 2.0);
  std::vector<LorentzPoint> pts;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> s{a(rng), b(rng)};
    pts.push_back(LorentzPoint::from_spatial(s, kNeg1));
  }
  return nn::points_to_rows(pts);
}

Tensor distance_to_origin(const Tensor& x) {
  return nn::distance_rows(x, ad::constant(1, x.cols(), [&] {
                             std::vector<double> o(x.cols(), 0.0);
                             o[0] = 1.0;
                             return o;
                           }()),
                           kNeg1);
}

}  // namespace

TEST_CASE("noise samples are on the manifold, centered, and reproducible") {
  Rng r1(5), r2(5);
  Tensor a = sample_noise(4000, 3, r1), b = sample_noise(4000, 3, r2);
  CHECK(std::vector<double>(a.values().begin(), a.values().end()) ==
        std::vector<double>(b.values().begin(), b.values().end()));
  auto pts = nn::rows_to_points(a, kNeg1);
  auto o = LorentzPoint::origin(3, kNeg1);
  double mean[3] = {0, 0, 0};
  for (const auto& p : pts) {
    CHECK(p.manifold_error() <= 1e-9);
    auto l = lorentz::log_map(o, p);
    for (int i = 0; i < 3; ++i) mean[i] += l.components()[i + 1] / 4000.0;
  }
  for (double m : mean) CHECK(std::abs(m) <= 4.0 / std::sqrt(4000.0));
}

TEST_CASE("constant critic has unit penalty") {
  Rng rng(1);
  Tensor real = far_rows(rng, 8), fake = far_rows(rng, 8);
  CriticFn constant_critic = [](const Tensor& x) { return ad::full(x.rows(), 1, 0.7); };
  CHECK(gradient_penalty(constant_critic, real, fake, rng).item() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("distance-to-origin critic has near-zero penalty") {
  Rng rng(2);
  Tensor real = far_rows(rng, 64), fake = far_rows(rng, 64);
  double gp = gradient_penalty(distance_to_origin, real, fake, rng).item();
  CHECK(gp >= 0.0);
  CHECK(gp <= 1e-3);
}

TEST_CASE("interpolates lie on the geodesic") {
  Rng rng(3);
  std::mt19937_64 r2(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 500; ++i) {
    auto a = testsupport::random_point(r2, 3, 4.0), b = testsupport::random_point(r2, 3, 4.0);
    auto x = lorentz::geodesic_point(a, b, u(r2));
    CHECK(x.manifold_error() <= 1e-9);
    CHECK(std::abs(lorentz::distance(a, x) + lorentz::distance(x, b) - lorentz::distance(a, b)) <= 1e-6);
  }
  // Identical pairs interpolate to the common point without error.
  Tensor same = far_rows(rng, 4);
  CHECK_NOTHROW(gradient_penalty(distance_to_origin, same, same, rng));
}

TEST_CASE("critic and generator losses") {
  Rng rng(5);
  Tensor real = far_rows(rng, 8), fake = far_rows(rng, 8);
  CriticFn zero = [](const Tensor& x) { return ad::zeros(x.rows(), 1); };
  CHECK(critic_loss(zero, real, fake, 0.0, rng).total.item() == 0.0);
  CriticFn c = [](const Tensor& x) { return ad::full(x.rows(), 1, 2.5); };
  CHECK(generator_loss(c, fake).item() == -2.5);
  // Larger scores on fake points mean a smaller generator loss.
  CHECK(generator_loss(distance_to_origin, fake).item() ==
        doctest::Approx(-ad::mean(distance_to_origin(fake)).item()));
}

TEST_CASE("critic loss is finite over 100 seeds") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    GanConfig cfg = small_config();
    Rng rng(seed);
    Generator g(cfg, rng);
    Critic d(cfg, rng);
    CriticFn fn = [&](const Tensor& x) { return d.forward(x); };
    Tensor fake = ad::detach(g.forward(sample_noise(8, cfg.latent_dim, rng)));
    Tensor real = far_rows(rng, 8);
    CHECK(std::isfinite(critic_loss(fn, real, fake, 10.0, rng).total.item()));
  }
}

TEST_CASE("generator receives gradients") {
  GanConfig cfg = small_config();
  Rng rng(6);
  Generator g(cfg, rng);
  Critic d(cfg, rng);
  Tensor fake = g.forward(sample_noise(8, cfg.latent_dim, rng));
  ad::backward(generator_loss([&](const Tensor& x) { return d.forward(x); }, fake));
  nn::ParamList ps;
  g.collect(ps);
  double total = 0.0;
  for (auto& p : ps)
    for (double v : p.tensor.grad()) total += std::abs(v);
  CHECK(total > 0.0);
}

TEST_CASE("penalty gradients with respect to critic parameters match finite differences") {
  GanConfig cfg = small_config();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(10 + seed);
    Critic d(cfg, rng);
    Tensor real = far_rows(rng, 4), fake = far_rows(rng, 4);
    nn::ParamList ps;
    d.collect(ps);
    std::vector<Tensor> in;
    for (auto& p : ps) in.push_back(p.tensor);
    auto f = [&](std::span<const Tensor>) {
      Rng gp_rng(99);
      return gradient_penalty([&](const Tensor& x) { return d.forward(x); }, real, fake, gp_rng);
    };
    CHECK(ad::fd_check(f, in).max_rel_error <= 1e-4);
  }
}

TEST_CASE("training smoke run on origin-concentrated data") {
  GanConfig cfg = small_config();
  cfg.seed = 7;
  Rng rng(8);
  std::vector<LorentzPoint> pts;
  std::normal_distribution<double> nd(0.0, 0.05);
  for (int i = 0; i < 128; ++i) {
    std::vector<double> s{nd(rng), nd(rng)};
    pts.push_back(LorentzPoint::from_spatial(s, kNeg1));
  }
  Tensor data = nn::points_to_rows(pts);
  int epochs_seen = 0;
  TrainCallbacks cb;
  cb.on_epoch_end = [&](int, const GanModel& m) {
    ++epochs_seen;
    Rng r(1);
    Tensor out = m.generator.forward(sample_noise(32, cfg.latent_dim, r));
    for (const auto& p : nn::rows_to_points(out, kNeg1)) CHECK(p.manifold_error() <= 1e-9);
  };
  cfg.epochs = 2;
  auto res = train(cfg, data, cb);
  CHECK(epochs_seen == 2);
  CHECK(res.history.size() == 2 * steps_per_epoch(cfg, 128));
  for (const auto& h : res.history) {
    CHECK(std::isfinite(h.critic_loss));
    CHECK(std::isfinite(h.generator_loss));
    CHECK(h.gradient_penalty >= 0.0);
  }
  auto again = train(cfg, data);
  REQUIRE(again.history.size() == res.history.size());
  for (std::size_t i = 0; i < res.history.size(); ++i) {
    CHECK(again.history[i].critic_loss == res.history[i].critic_loss);
    CHECK(again.history[i].generator_loss == res.history[i].generator_loss);
  }
}

TEST_CASE("config validation") {
  GanConfig c = small_config();
  c.lambda_gp = -1.0;
  CHECK_THROWS_AS(c.validate(), haegan::Error);
  c = small_config();
  c.latent_dim = 0;
  CHECK_THROWS_AS(c.validate(), haegan::Error);
}

TEST_CASE("energy distance separates shifted sets") {
  Rng rng(9);
  Tensor a = far_rows(rng, 200), b = far_rows(rng, 200);
  std::vector<LorentzPoint> shifted;
  std::normal_distribution<double> nd(0.0, 0.3);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> s{-2.0 + nd(rng), nd(rng)};
    shifted.push_back(LorentzPoint::from_spatial(s, kNeg1));
  }
  Tensor c = nn::points_to_rows(shifted);
  double same = energy_distance(a, b), far = energy_distance(a, c);
  CHECK(far > 10 * std::abs(same));
  CHECK(energy_distance(a, c) == doctest::Approx(energy_distance(c, a)).epsilon(1e-12));
}

TEST_CASE("toy data is scaled into the unit box and lifted") {
  for (auto d : {ToyDensity::Checkerboard, ToyDensity::EightGaussians, ToyDensity::TwoMoons}) {
    Rng rng(10);
    auto data = make_toy_data(d, 500, 100, rng);
    CHECK(data.train.rows() == 500);
    CHECK(data.heldout.rows() == 100);
    for (const auto& p : nn::rows_to_points(data.train, kNeg1)) {
      auto l = lorentz::log_map(LorentzPoint::origin(2, kNeg1), p);
      CHECK(std::abs(l.components()[1]) <= 1.0 + 1e-12);
      CHECK(std::abs(l.components()[2]) <= 1.0 + 1e-12);
    }
    CHECK(parse_toy_density(toy_density_name(d)) == d);
  }
  CHECK_THROWS_AS(parse_toy_density("spirals"), haegan::Error);
}
