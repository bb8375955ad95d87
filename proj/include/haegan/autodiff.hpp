#pragma once

// Reverse-mode automatic differentiation over dense row-major matrices.
//
// Every tensor is 2-D (rows x cols); batches of points are rows. Each op records
// a backward rule and a forward-mode (JVP) rule. The JVP rule is itself built
// from differentiable ops, so a JVP result can be back-propagated to parameters.
// This is how the gradient penalty differentiates ||grad_x D|| without a full
// double-backward implementation.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "haegan/lorentz.hpp"

namespace haegan::ad {

struct Node;

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  bool defined() const noexcept { return static_cast<bool>(node_); }
  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t size() const { return rows() * cols(); }

  std::span<const double> values() const;
  // Only meaningful for leaves; used by optimizers to update parameters in place.
  std::span<double> mutable_values();
  double at(std::size_t r, std::size_t c) const { return values()[r * cols() + c]; }
  double item() const;

  // Empty when no gradient has reached this tensor.
  std::span<const double> grad() const;
  void zero_grad();
  bool requires_grad() const;

  Node* node() const noexcept { return node_.get(); }
  const std::shared_ptr<Node>& shared() const noexcept { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

using BackwardFn = std::function<void(Node& self)>;
using JvpFn = std::function<Tensor(const Tensor& self, std::span<const Tensor> parent_tangents)>;

struct Node {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<Tensor> parents;
  BackwardFn backward;
  JvpFn jvp;
  const char* op = "leaf";

  // Gradient buffer, zero-initialized on first use.
  std::span<double> grad_buffer();
};

// Leaves
Tensor constant(std::size_t rows, std::size_t cols, std::vector<double> values);
Tensor zeros(std::size_t rows, std::size_t cols);
Tensor full(std::size_t rows, std::size_t cols, double v);
Tensor scalar(double v);
Tensor parameter(std::size_t rows, std::size_t cols, std::vector<double> values);
// Copy of the values with no history.
Tensor detach(const Tensor& t);

// Elementwise, same shape.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

// a * s for a 1x1 tensor s (the only broadcasting besides the explicit ones below).
Tensor mul_scalar(const Tensor& a, const Tensor& s);
// a[r,c] + row[0,c]
Tensor add_row(const Tensor& a, const Tensor& row);
// a[r,c] * col[r,0]
Tensor mul_col(const Tensor& a, const Tensor& col);

// x * w^T for x (r x n) and w (m x n).
Tensor linear(const Tensor& x, const Tensor& w);
// a (r x k) * b (k x c)
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor cosh(const Tensor& a);
Tensor sinh(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor square(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor reciprocal(const Tensor& a);
Tensor clamp_min(const Tensor& a, double lo);
// acosh(max(a, 1)); the derivative uses max(a, 1 + 1e-12).
Tensor acosh(const Tensor& a);
// asinh(sqrt(q)) / sqrt(q) and sinh(sqrt(q)) / sqrt(q), smooth at q = 0. Backward only.
Tensor asinh_sqrt_ratio(const Tensor& q);
Tensor sinh_sqrt_ratio(const Tensor& q);

// Reductions
Tensor row_sum(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// Euclidean norm of each row, r x 1.
Tensor row_norm(const Tensor& a);
// Rowwise Lorentz inner product, r x 1.
Tensor lorentz_rows(const Tensor& a, const Tensor& b);
// Negates column 0 (applies the metric diag(-1, 1, ..., 1)).
Tensor flip_time(const Tensor& a);

// Layout
Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t len);
Tensor slice_rows(const Tensor& a, std::size_t start, std::size_t len);
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows);

Tensor log_softmax_rows(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
// Mean negative log-likelihood of labels[r] under softmax(logits[r]).
Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> labels);

// Fills the gradient of every requires_grad ancestor of a 1x1 root.
void backward(const Tensor& root);

// Directional derivative of `output` with respect to the leaf `input` along
// `direction`, as a differentiable tensor shaped like `output`.
Tensor jvp(const Tensor& output, const Tensor& input, const Tensor& direction);

// --- Lorentz helpers on batched rows ---

// [sqrt(|s|^2 - 1/K), s] for each row s.
Tensor lift_rows(const Tensor& spatial, lorentz::Curvature k);
// Riemannian gradient rows for base points (constants) and Euclidean gradient rows.
Tensor riemannian_grad_rows(const Tensor& base, const Tensor& euclid_grad, lorentz::Curvature k);

// --- Finite-difference checking ---

struct FdReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
};

// Compares analytic gradients of a scalar function against central differences
// for every coordinate of every input. Relative error uses max(|a|, |n|, 1e-3)
// as denominator.
FdReport fd_check(const std::function<Tensor(std::span<const Tensor>)>& f,
                  std::span<const Tensor> inputs, double h = 1e-5);

}  // namespace haegan::ad
