#pragma once

// Hyperbolic Wasserstein GAN with a Riemannian gradient penalty evaluated at
// points sampled uniformly along geodesics between fake and real samples.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "haegan/layers.hpp"

namespace haegan::gan {

using ad::Tensor;
using lorentz::Curvature;

struct GanConfig {
  std::size_t latent_dim = 256;
  std::size_t hidden_dim = 128;
  std::size_t depth_gen = 3;
  std::size_t output_dim = 2;
  std::size_t critic_hidden_dim = 128;
  std::size_t depth_critic = 3;
  double lambda_gp = 10.0;
  int n_critic = 5;
  double lr = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double dropout = 0.0;
  std::size_t batch_size = 128;
  int epochs = 20;
  std::uint64_t seed = 0;
  double curvature = -1.0;

  void validate() const;
};

// Stack of depth_gen HLinear layers: latent -> hidden -> ... -> output.
class Generator {
 public:
  Generator() = default;
  Generator(const GanConfig& cfg, Rng& rng);
  Tensor forward(const Tensor& z, const nn::Context& ctx = {}) const;
  void collect(nn::ParamList& out, const std::string& prefix = "generator") const;

  std::vector<nn::HLinear> layers;
};

// depth_critic HLinear layers followed by a single-centroid HCDist.
class Critic {
 public:
  Critic() = default;
  Critic(const GanConfig& cfg, Rng& rng);
  Tensor forward(const Tensor& x, const nn::Context& ctx = {}) const;
  void collect(nn::ParamList& out, const std::string& prefix = "critic") const;

  std::vector<nn::HLinear> layers;
  nn::HCDist head;
};

struct GanModel {
  Generator generator;
  Critic critic;
};

using CriticFn = std::function<Tensor(const Tensor&)>;

Tensor sample_noise(std::size_t batch, std::size_t latent_dim, Rng& rng, Curvature k = Curvature{});

// mean over pairs of (|grad_R D(x_hat)|_L - 1)^2 with x_hat on the fake->real geodesic.
// Real and fake are treated as constants.
Tensor gradient_penalty(const CriticFn& critic, const Tensor& real, const Tensor& fake, Rng& rng,
                        Curvature k = Curvature{});

struct CriticLoss {
  Tensor total;
  Tensor penalty;
};
CriticLoss critic_loss(const CriticFn& critic, const Tensor& real, const Tensor& fake, double lambda_gp, Rng& rng,
                       Curvature k = Curvature{});
Tensor generator_loss(const CriticFn& critic, const Tensor& fake);

struct StepRecord {
  std::int64_t step = 0;
  int epoch = 0;
  double critic_loss = 0.0;
  double generator_loss = 0.0;
  double gradient_penalty = 0.0;
};

struct TrainCallbacks {
  std::function<void(int epoch, const GanModel& model)> on_epoch_end;
};

struct TrainResult {
  GanModel model;
  std::vector<StepRecord> history;
};

// One epoch is ceil(N / batch_size) generator steps, each preceded by n_critic
// critic steps. Throws NumericalAbort on a non-finite loss or gradient.
TrainResult train(const GanConfig& cfg, const Tensor& data, const TrainCallbacks& callbacks = {});
std::size_t steps_per_epoch(const GanConfig& cfg, std::size_t n);

// Energy distance with d_L as the metric: 2E d(a,b) - E d(a,a') - E d(b,b').
double energy_distance(const Tensor& a, const Tensor& b, Curvature k = Curvature{});

enum class ToyDensity { Checkerboard, EightGaussians, TwoMoons };
ToyDensity parse_toy_density(const std::string& name);
std::string toy_density_name(ToyDensity d);

// n x 2 raw samples, row-major.
std::vector<double> sample_toy_2d(ToyDensity d, std::size_t n, Rng& rng);

struct ToyData {
  Tensor train;
  Tensor heldout;
};
// Samples train + heldout together, scales coordinates into [-1, 1] by the
// largest absolute coordinate, and maps them with e2h.
ToyData make_toy_data(ToyDensity d, std::size_t n_train, std::size_t n_heldout, Rng& rng, Curvature k = Curvature{});

}  // namespace haegan::gan
