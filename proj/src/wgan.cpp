#include "haegan/wgan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "haegan/error.hpp"
#include "haegan/optim.hpp"

namespace haegan::gan {

using namespace ad;

void GanConfig::validate() const {
  if (latent_dim == 0 || hidden_dim == 0 || output_dim == 0 || critic_hidden_dim == 0) {
    throw config_error("gan: all dimensions must be >= 1");
  }
  if (depth_gen == 0 || depth_critic == 0) throw config_error("gan: depths must be >= 1");
  if (!(lambda_gp >= 0.0)) throw config_error("gan: lambda_gp must be >= 0");
  if (n_critic < 1) throw config_error("gan: n_critic must be >= 1");
  if (!(lr > 0.0)) throw config_error("gan: lr must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) throw config_error("gan: betas must be in [0, 1)");
  if (dropout < 0.0 || dropout >= 1.0) throw config_error("gan: dropout must be in [0, 1)");
  if (batch_size == 0) throw config_error("gan: batch_size must be >= 1");
  if (epochs < 1) throw config_error("gan: epochs must be >= 1");
  if (!(curvature < 0.0)) throw config_error("gan: curvature must be negative");
}

namespace {

std::vector<nn::HLinear> hlinear_stack(std::size_t in, std::size_t hidden, std::size_t out, std::size_t depth,
                                       const GanConfig& cfg, Rng& rng) {
  nn::HLinearOptions opts;
  opts.dropout = cfg.dropout;
  opts.k = Curvature(cfg.curvature);
  std::vector<nn::HLinear> layers;
  for (std::size_t i = 0; i < depth; ++i) {
    std::size_t a = i == 0 ? in : hidden;
    std::size_t b = i + 1 == depth ? out : hidden;
    layers.emplace_back(a, b, rng, opts);
  }
  return layers;
}

}  // namespace

Generator::Generator(const GanConfig& cfg, Rng& rng)
    : layers(hlinear_stack(cfg.latent_dim, cfg.hidden_dim, cfg.output_dim, cfg.depth_gen, cfg, rng)) {}

Tensor Generator::forward(const Tensor& z, const nn::Context& ctx) const {
  Tensor h = z;
  for (const auto& l : layers) h = l.forward(h, ctx);
  return h;
}

void Generator::collect(nn::ParamList& out, const std::string& prefix) const {
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i].collect(out, prefix + ".layer" + std::to_string(i));
}

Critic::Critic(const GanConfig& cfg, Rng& rng)
    : layers(hlinear_stack(cfg.output_dim, cfg.critic_hidden_dim, cfg.critic_hidden_dim, cfg.depth_critic, cfg,
                           rng)),
      head(cfg.critic_hidden_dim, 1, rng, Curvature(cfg.curvature)) {}

Tensor Critic::forward(const Tensor& x, const nn::Context& ctx) const {
  Tensor h = x;
  for (const auto& l : layers) h = l.forward(h, ctx);
  return head.forward(h);
}

void Critic::collect(nn::ParamList& out, const std::string& prefix) const {
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i].collect(out, prefix + ".layer" + std::to_string(i));
  head.collect(out, prefix + ".head");
}

Tensor sample_noise(std::size_t batch, std::size_t latent_dim, Rng& rng, Curvature k) {
  return nn::wrapped_normal_origin_rows(batch, latent_dim, rng, k);
}

Tensor gradient_penalty(const CriticFn& critic, const Tensor& real, const Tensor& fake, Rng& rng, Curvature k) {
  if (real.rows() != fake.rows() || real.cols() != fake.cols()) {
    throw invalid_argument("gradient_penalty: real and fake batches must have the same shape");
  }
  const std::size_t B = real.rows(), C = real.cols();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto rp = nn::rows_to_points(real, k);
  auto fp = nn::rows_to_points(fake, k);
  std::vector<double> xv;
  xv.reserve(B * C);
  for (std::size_t r = 0; r < B; ++r) {
    auto x = lorentz::geodesic_point(fp[r], rp[r], unif(rng));
    xv.insert(xv.end(), x.coords().begin(), x.coords().end());
  }
  Tensor base = constant(B, C, xv);
  // A leaf that tracks history so the critic graph can be differentiated with respect to it.
  Tensor x_hat = parameter(B, C, std::move(xv));
  Tensor d = critic(x_hat);
  std::vector<Tensor> cols;
  for (std::size_t c = 0; c < C; ++c) {
    std::vector<double> dir(B * C, 0.0);
    for (std::size_t r = 0; r < B; ++r) dir[r * C + c] = 1.0;
    cols.push_back(jvp(d, x_hat, constant(B, C, std::move(dir))));
  }
  Tensor rg = riemannian_grad_rows(base, concat_cols(cols), k);
  Tensor norm = sqrt(clamp_min(lorentz_rows(rg, rg), 1e-24));
  return mean(square(add_scalar(norm, -1.0)));
}

CriticLoss critic_loss(const CriticFn& critic, const Tensor& real, const Tensor& fake, double lambda_gp, Rng& rng,
                       Curvature k) {
  Tensor gp = gradient_penalty(critic, real, fake, rng, k);
  Tensor w = sub(mean(critic(fake)), mean(critic(real)));
  return {add(w, scale(gp, lambda_gp)), gp};
}

Tensor generator_loss(const CriticFn& critic, const Tensor& fake) { return neg(mean(critic(fake))); }

std::size_t steps_per_epoch(const GanConfig& cfg, std::size_t n) { return (n + cfg.batch_size - 1) / cfg.batch_size; }

namespace {

// Cycles through reshuffled permutations of [0, n).
class Batcher {
 public:
  Batcher(std::size_t n, Rng& rng) : perm_(n), rng_(rng) {
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    std::shuffle(perm_.begin(), perm_.end(), rng_);
  }
  std::vector<std::size_t> next(std::size_t batch) {
    std::vector<std::size_t> out;
    while (out.size() < batch) {
      if (pos_ == perm_.size()) {
        std::shuffle(perm_.begin(), perm_.end(), rng_);
        pos_ = 0;
      }
      out.push_back(perm_[pos_++]);
    }
    return out;
  }

 private:
  std::vector<std::size_t> perm_;
  Rng& rng_;
  std::size_t pos_ = 0;
};

void require_finite(double v, const char* what, std::int64_t step) {
  if (!std::isfinite(v)) throw NumericalAbort(std::string("non-finite ") + what, step);
}

}  // namespace

TrainResult train(const GanConfig& cfg, const Tensor& data, const TrainCallbacks& callbacks) {
  cfg.validate();
  const Curvature k(cfg.curvature);
  if (data.rows() == 0 || data.cols() != cfg.output_dim + 1) {
    throw invalid_argument("gan train: data must have output_dim + 1 columns");
  }
  Rng init_rng = make_rng(cfg.seed, 0);
  Rng batch_rng = make_rng(cfg.seed, 1);
  Rng noise_rng = make_rng(cfg.seed, 2);
  Rng gp_rng = make_rng(cfg.seed, 3);
  Rng drop_rng = make_rng(cfg.seed, 4);

  TrainResult res;
  res.model.generator = Generator(cfg, init_rng);
  res.model.critic = Critic(cfg, init_rng);
  const Generator& gen = res.model.generator;
  const Critic& critic = res.model.critic;

  nn::ParamList gp, dp;
  gen.collect(gp);
  critic.collect(dp);
  optim::AdamOptions ao{cfg.lr, cfg.beta1, cfg.beta2, 1e-8};
  optim::RiemannianAdam opt_g(gp, ao), opt_d(dp, ao);

  nn::Context ctx{true, &drop_rng};
  CriticFn d_fn = [&](const Tensor& x) { return critic.forward(x, ctx); };
  Batcher batcher(data.rows(), batch_rng);
  const std::size_t spe = steps_per_epoch(cfg, data.rows());
  std::int64_t step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t s = 0; s < spe; ++s, ++step) {
      StepRecord rec;
      rec.step = step;
      rec.epoch = epoch;
      try {
        for (int c = 0; c < cfg.n_critic; ++c) {
          Tensor real = gather_rows(data, batcher.next(cfg.batch_size));
          Tensor fake = detach(gen.forward(sample_noise(cfg.batch_size, cfg.latent_dim, noise_rng, k), ctx));
          opt_d.zero_grad();
          CriticLoss cl = critic_loss(d_fn, real, fake, cfg.lambda_gp, gp_rng, k);
          require_finite(cl.total.item(), "critic loss", step);
          backward(cl.total);
          opt_d.step();
          rec.critic_loss = cl.total.item();
          rec.gradient_penalty = cl.penalty.item();
        }
        opt_g.zero_grad();
        Tensor fake = gen.forward(sample_noise(cfg.batch_size, cfg.latent_dim, noise_rng, k), ctx);
        Tensor gl = generator_loss(d_fn, fake);
        require_finite(gl.item(), "generator loss", step);
        backward(gl);
        opt_g.step();
        rec.generator_loss = gl.item();
      } catch (const NumericalAbort&) {
        throw;
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::Numerical) throw NumericalAbort(e.what(), step);
        throw;
      }
      res.history.push_back(rec);
    }
    if (callbacks.on_epoch_end) callbacks.on_epoch_end(epoch, res.model);
  }
  return res;
}

namespace {

double row_distance(std::span<const double> x, std::span<const double> y, double neg_k) {
  double s = -(x[0] - y[0]) * (x[0] - y[0]);
  for (std::size_t i = 1; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return 2.0 * std::asinh(std::sqrt(neg_k * std::max(s, 0.0)) / 2.0) / std::sqrt(neg_k);
}

double mean_cross(const Tensor& a, const Tensor& b, double neg_k, bool skip_diagonal) {
  const std::size_t C = a.cols();
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto x = a.values().subspan(i * C, C);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      if (skip_diagonal && i == j) continue;
      s += row_distance(x, b.values().subspan(j * C, C), neg_k);
      ++count;
    }
  }
  return count ? s / static_cast<double>(count) : 0.0;
}

}  // namespace

double energy_distance(const Tensor& a, const Tensor& b, Curvature k) {
  if (a.cols() != b.cols()) throw invalid_argument("energy_distance: dimension mismatch");
  if (a.rows() < 2 || b.rows() < 2) throw invalid_argument("energy_distance: need at least two points per set");
  const double nk = -k.value();
  return 2.0 * mean_cross(a, b, nk, false) - mean_cross(a, a, nk, true) - mean_cross(b, b, nk, true);
}

ToyDensity parse_toy_density(const std::string& name) {
  if (name == "checkerboard") return ToyDensity::Checkerboard;
  if (name == "8gaussians") return ToyDensity::EightGaussians;
  if (name == "2moons") return ToyDensity::TwoMoons;
  throw config_error("unknown toy density '" + name + "' (expected checkerboard, 8gaussians, 2moons)");
}

std::string toy_density_name(ToyDensity d) {
  switch (d) {
    case ToyDensity::Checkerboard: return "checkerboard";
    case ToyDensity::EightGaussians: return "8gaussians";
    case ToyDensity::TwoMoons: return "2moons";
  }
  return "?";
}

std::vector<double> sample_toy_2d(ToyDensity d, std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> out(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = 0, y = 0;
    switch (d) {
      case ToyDensity::Checkerboard: {
        double x1 = u01(rng) * 4.0 - 2.0;
        double x2 = u01(rng) - 2.0 * static_cast<double>(std::uniform_int_distribution<int>(0, 1)(rng));
        int parity = ((static_cast<int>(std::floor(x1)) % 2) + 2) % 2;
        x = 2.0 * x1;
        y = 2.0 * (x2 + parity);
        break;
      }
      case ToyDensity::EightGaussians: {
        static const double r = 1.0 / std::sqrt(2.0);
        static const double centers[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {r, r}, {r, -r}, {-r, r}, {-r, -r}};
        int c = std::uniform_int_distribution<int>(0, 7)(rng);
        x = (nd(rng) * 0.5 + 4.0 * centers[c][0]) / 1.414;
        y = (nd(rng) * 0.5 + 4.0 * centers[c][1]) / 1.414;
        break;
      }
      case ToyDensity::TwoMoons: {
        double t = u01(rng) * M_PI;
        bool outer = u01(rng) < 0.5;
        x = outer ? std::cos(t) : 1.0 - std::cos(t);
        y = outer ? std::sin(t) : 0.5 - std::sin(t);
        x = 2.0 * (x + 0.1 * nd(rng)) - 1.0;
        y = 2.0 * (y + 0.1 * nd(rng)) - 0.2;
        break;
      }
    }
    out[2 * i] = x;
    out[2 * i + 1] = y;
  }
  return out;
}

ToyData make_toy_data(ToyDensity d, std::size_t n_train, std::size_t n_heldout, Rng& rng, Curvature k) {
  const std::size_t n = n_train + n_heldout;
  auto raw = sample_toy_2d(d, n, rng);
  double m = 0.0;
  for (double v : raw) m = std::max(m, std::abs(v));
  if (m > 0.0)
    for (double& v : raw) v /= m;
  auto lift = [&](std::size_t from, std::size_t count) {
    std::vector<double> rows;
    rows.reserve(count * 3);
    for (std::size_t i = from; i < from + count; ++i) {
      auto p = lorentz::e2h(std::span<const double>(raw).subspan(2 * i, 2), k);
      rows.insert(rows.end(), p.coords().begin(), p.coords().end());
    }
    return constant(count, 3, std::move(rows));
  };
  return {lift(0, n_train), lift(n_train, n_heldout)};
}

}  // namespace haegan::gan
