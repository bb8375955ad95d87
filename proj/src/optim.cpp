#include "haegan/optim.hpp"

#include <cmath>
#include <string>

#include "haegan/error.hpp"

namespace haegan::optim {

namespace {

std::vector<double> grad_or_zero(const nn::ParamRef& p) {
  auto g = p.tensor.grad();
  if (g.empty()) return std::vector<double>(p.tensor.size(), 0.0);
  for (double x : g) {
    if (!std::isfinite(x)) throw Error(ErrorKind::Numerical, "non-finite gradient in parameter " + p.name);
  }
  return {g.begin(), g.end()};
}

void write_point(std::span<double> row, const lorentz::LorentzPoint& p) {
  std::copy(p.coords().begin(), p.coords().end(), row.begin());
}

}  // namespace

RiemannianAdam::RiemannianAdam(nn::ParamList params, AdamOptions opts) : params_(std::move(params)), opts_(opts) {
  if (!(opts.lr > 0.0)) throw invalid_argument("Adam: learning rate must be positive");
  if (opts.beta1 < 0.0 || opts.beta1 >= 1.0 || opts.beta2 < 0.0 || opts.beta2 >= 1.0) {
    throw invalid_argument("Adam: betas must lie in [0, 1)");
  }
  for (const auto& p : params_) {
    Slot s;
    s.m.assign(p.tensor.size(), 0.0);
    s.u.assign(p.manifold ? p.tensor.rows() : p.tensor.size(), 0.0);
    slots_.push_back(std::move(s));
  }
}

void RiemannianAdam::step() {
  // Validate every gradient before touching any parameter.
  std::vector<std::vector<double>> grads;
  grads.reserve(params_.size());
  for (const auto& p : params_) grads.push_back(grad_or_zero(p));

  ++t_;
  const double b1 = opts_.beta1, b2 = opts_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));

  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k];
    auto& s = slots_[k];
    auto val = p.tensor.mutable_values();
    const auto& g = grads[k];
    if (!p.manifold) {
      for (std::size_t i = 0; i < val.size(); ++i) {
        s.m[i] = b1 * s.m[i] + (1.0 - b1) * g[i];
        s.u[i] = b2 * s.u[i] + (1.0 - b2) * g[i] * g[i];
        val[i] -= opts_.lr * (s.m[i] / c1) / (std::sqrt(s.u[i] / c2) + opts_.eps);
      }
      continue;
    }
    const std::size_t C = p.tensor.cols();
    for (std::size_t r = 0; r < p.tensor.rows(); ++r) {
      auto row = val.subspan(r * C, C);
      auto x = lorentz::LorentzPoint::from_spatial(row.subspan(1), p.k);
      auto rg = lorentz::riemannian_grad(x, std::span<const double>(g).subspan(r * C, C));
      std::span<double> m(s.m.data() + r * C, C);
      auto mt = lorentz::TangentVector::project(x, m);
      std::vector<double> mv(C);
      for (std::size_t i = 0; i < C; ++i) mv[i] = b1 * mt.components()[i] + (1.0 - b1) * rg.components()[i];
      const double gg = std::max(lorentz::lorentz_inner(rg.components(), rg.components()), 0.0);
      s.u[r] = b2 * s.u[r] + (1.0 - b2) * gg;
      const double denom = std::sqrt(s.u[r] / c2) + opts_.eps;
      std::vector<double> dir(C);
      for (std::size_t i = 0; i < C; ++i) dir[i] = -opts_.lr * (mv[i] / c1) / denom;
      auto x_new = lorentz::exp_map(x, lorentz::TangentVector::project(x, dir));
      auto moved = lorentz::parallel_transport(x, x_new, lorentz::TangentVector::project(x, mv));
      std::copy(moved.components().begin(), moved.components().end(), m.begin());
      write_point(row, x_new);
    }
  }
}

void RiemannianAdam::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

void RiemannianSGD::step() {
  for (auto& p : params_) {
    auto g = grad_or_zero(p);
    auto val = p.tensor.mutable_values();
    if (!p.manifold) {
      for (std::size_t i = 0; i < val.size(); ++i) val[i] -= lr_ * g[i];
      continue;
    }
    const std::size_t C = p.tensor.cols();
    for (std::size_t r = 0; r < p.tensor.rows(); ++r) {
      auto row = val.subspan(r * C, C);
      auto x = lorentz::LorentzPoint::from_spatial(row.subspan(1), p.k);
      auto rg = lorentz::riemannian_grad(x, std::span<const double>(g).subspan(r * C, C));
      std::vector<double> dir(rg.components().begin(), rg.components().end());
      for (auto& d : dir) d *= -lr_;
      write_point(row, lorentz::exp_map(x, lorentz::TangentVector::project(x, dir)));
    }
  }
}

void RiemannianSGD::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

StepLR::StepLR(RiemannianAdam& opt, std::int64_t step_size, double gamma)
    : opt_(opt), step_size_(step_size), gamma_(gamma) {
  if (step_size <= 0) throw invalid_argument("StepLR: step size must be positive");
  if (!(gamma > 0.0)) throw invalid_argument("StepLR: gamma must be positive");
}

void StepLR::step() {
  ++count_;
  if (count_ % step_size_ == 0) opt_.set_lr(opt_.lr() * gamma_);
}

}  // namespace haegan::optim
