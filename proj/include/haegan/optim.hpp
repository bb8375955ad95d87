#pragma once

#include <cstdint>
#include <vector>

#include "haegan/layers.hpp"

namespace haegan::optim {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam for Euclidean parameters; for manifold parameters each row is a point
// with a tangent first moment (transported after every step) and a scalar
// second moment <g,g>_L.
class RiemannianAdam {
 public:
  RiemannianAdam(nn::ParamList params, AdamOptions opts);

  // Throws Error(Numerical) naming the parameter if any gradient is non-finite.
  void step();
  void zero_grad();

  double lr() const { return opts_.lr; }
  void set_lr(double lr) { opts_.lr = lr; }
  std::int64_t steps() const { return t_; }
  const nn::ParamList& params() const { return params_; }

 private:
  struct Slot {
    std::vector<double> m;
    std::vector<double> u;  // per coordinate (Euclidean) or per row (manifold)
  };
  nn::ParamList params_;
  std::vector<Slot> slots_;
  AdamOptions opts_;
  std::int64_t t_ = 0;
};

// x <- exp_x(-lr * rgrad) per manifold row, x <- x - lr * g otherwise.
class RiemannianSGD {
 public:
  RiemannianSGD(nn::ParamList params, double lr) : params_(std::move(params)), lr_(lr) {}
  void step();
  void zero_grad();

 private:
  nn::ParamList params_;
  double lr_;
};

// Multiplies the learning rate by gamma every step_size calls to step().
class StepLR {
 public:
  StepLR(RiemannianAdam& opt, std::int64_t step_size, double gamma);
  void step();

 private:
  RiemannianAdam& opt_;
  std::int64_t step_size_;
  double gamma_;
  std::int64_t count_ = 0;
};

}  // namespace haegan::optim
