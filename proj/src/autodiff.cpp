#include "haegan/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "haegan/error.hpp"

namespace haegan::ad {

std::size_t Tensor::rows() const { return node_ ? node_->rows : 0; }
std::size_t Tensor::cols() const { return node_ ? node_->cols : 0; }

std::span<const double> Tensor::values() const {
  if (!node_) throw invalid_argument("undefined tensor");
  return node_->value;
}

std::span<double> Tensor::mutable_values() {
  if (!node_) throw invalid_argument("undefined tensor");
  return node_->value;
}

double Tensor::item() const {
  if (size() != 1) throw invalid_argument("item() needs a 1x1 tensor");
  return node_->value[0];
}

std::span<const double> Tensor::grad() const {
  if (!node_) return {};
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_) node_->grad.clear();
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

std::span<double> Node::grad_buffer() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad;
}

namespace {

std::string shape_str(const Tensor& t) {
  return "[" + std::to_string(t.rows()) + "," + std::to_string(t.cols()) + "]";
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.defined() || !b.defined()) throw invalid_argument(std::string(op) + ": undefined operand");
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
}

void require_defined(const char* op, const Tensor& a) {
  if (!a.defined()) throw invalid_argument(std::string(op) + ": undefined operand");
}

Tensor leaf(std::size_t rows, std::size_t cols, std::vector<double> values, bool requires_grad) {
  if (values.size() != rows * cols) throw invalid_argument("tensor value count does not match shape");
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor make_op(const char* op, std::size_t rows, std::size_t cols, std::vector<double> value,
               std::vector<Tensor> parents, BackwardFn bw, JvpFn jvp) {
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->value = std::move(value);
  n->op = op;
  bool rg = std::any_of(parents.begin(), parents.end(), [](const Tensor& p) { return p.requires_grad(); });
  if (rg) {
    n->requires_grad = true;
    n->parents = std::move(parents);
    n->backward = std::move(bw);
    n->jvp = std::move(jvp);
  }
  return Tensor(std::move(n));
}

Node& P(Node& self, std::size_t i) { return *self.parents[i].node(); }

Tensor add_defined(const Tensor& a, const Tensor& b) {
  if (!a.defined()) return b;
  if (!b.defined()) return a;
  return add(a, b);
}

Tensor or_zeros(const Tensor& t, std::size_t rows, std::size_t cols) {
  return t.defined() ? t : zeros(rows, cols);
}

Tensor mask_of(const Tensor& a, double lo) {
  std::vector<double> m(a.size());
  auto x = a.values();
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = x[i] > lo ? 1.0 : 0.0;
  return constant(a.rows(), a.cols(), std::move(m));
}

// Elementwise unary op: f maps x to y, df gives dy/dx from (x, y).
template <class F, class DF>
Tensor unary(const char* op, const Tensor& a, F f, DF df, JvpFn jvp) {
  require_defined(op, a);
  auto x = a.values();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(x[i]);
  BackwardFn bw = [df](Node& self) {
    Node& p = P(self, 0);
    if (!p.requires_grad) return;
    auto g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * df(p.value[i], self.value[i]);
  };
  return make_op(op, a.rows(), a.cols(), std::move(y), {a}, std::move(bw), std::move(jvp));
}

JvpFn no_jvp(const char* op) {
  return [op](const Tensor&, std::span<const Tensor>) -> Tensor {
    throw invalid_argument(std::string(op) + ": forward-mode derivative not supported");
  };
}

// Rowwise pick of one column per row.
Tensor pick(const Tensor& a, std::vector<std::size_t> labels) {
  if (labels.size() != a.rows()) throw invalid_argument("pick: one label per row required");
  std::vector<double> y(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    if (labels[r] >= a.cols()) throw invalid_argument("pick: label out of range");
    y[r] = a.at(r, labels[r]);
  }
  BackwardFn bw = [labels](Node& self) {
    Node& p = P(self, 0);
    if (!p.requires_grad) return;
    auto g = p.grad_buffer();
    for (std::size_t r = 0; r < labels.size(); ++r) g[r * p.cols + labels[r]] += self.grad[r];
  };
  JvpFn jv = [labels](const Tensor&, std::span<const Tensor> t) { return pick(t[0], labels); };
  return make_op("pick", a.rows(), 1, std::move(y), {a}, std::move(bw), std::move(jv));
}

std::vector<Tensor> topo_order(const Tensor& root) {
  std::vector<Tensor> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Tensor, std::size_t>> stack;
  stack.emplace_back(root, 0);
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [t, idx] = stack.back();
    Node* n = t.node();
    if (idx < n->parents.size()) {
      const Tensor& p = n->parents[idx++];
      if (p.requires_grad() && seen.insert(p.node()).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(t);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

Tensor constant(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return leaf(rows, cols, std::move(values), false);
}

Tensor zeros(std::size_t rows, std::size_t cols) { return leaf(rows, cols, std::vector<double>(rows * cols, 0.0), false); }

Tensor full(std::size_t rows, std::size_t cols, double v) { return leaf(rows, cols, std::vector<double>(rows * cols, v), false); }

Tensor scalar(double v) { return leaf(1, 1, {v}, false); }

Tensor parameter(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return leaf(rows, cols, std::move(values), true);
}

Tensor detach(const Tensor& t) {
  require_defined("detach", t);
  return constant(t.rows(), t.cols(), std::vector<double>(t.values().begin(), t.values().end()));
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  auto x = a.values(), y = b.values();
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] + y[i];
  BackwardFn bw = [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      Node& p = P(self, k);
      if (!p.requires_grad) continue;
      auto g = p.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  };
  JvpFn jv = [](const Tensor&, std::span<const Tensor> t) { return add_defined(t[0], t[1]); };
  return make_op("add", a.rows(), a.cols(), std::move(z), {a, b}, std::move(bw), std::move(jv));
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  auto x = a.values(), y = b.values();
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] - y[i];
  BackwardFn bw = [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      Node& p = P(self, k);
      if (!p.requires_grad) continue;
      double s = k == 0 ? 1.0 : -1.0;
      auto g = p.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * self.grad[i];
    }
  };
  JvpFn jv = [](const Tensor&, std::span<const Tensor> t) {
    if (!t[1].defined()) return t[0];
    if (!t[0].defined()) return neg(t[1]);
    return sub(t[0], t[1]);
  };
  return make_op("sub", a.rows(), a.cols(), std::move(z), {a, b}, std::move(bw), std::move(jv));
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  auto x = a.values(), y = b.values();
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] * y[i];
  BackwardFn bw = [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      Node& p = P(self, k);
      if (!p.requires_grad) continue;
      const auto& other = P(self, 1 - k).value;
      auto g = p.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * other[i];
    }
  };
  JvpFn jv = [a, b](const Tensor&, std::span<const Tensor> t) {
    Tensor r0 = t[0].defined() ? mul(t[0], b) : Tensor();
    Tensor r1 = t[1].defined() ? mul(a, t[1]) : Tensor();
    return add_defined(r0, r1);
  };
  return make_op("mul", a.rows(), a.cols(), std::move(z), {a, b}, std::move(bw), std::move(jv));
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor scale(const Tensor& a, double s) {
  return unary(
      "scale", a, [s](double x) { return s * x; }, [s](double, double) { return s; },
      [s](const Tensor&, std::span<const Tensor> t) { return scale(t[0], s); });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary(
      "add_scalar", a, [s](double x) { return x + s; }, [](double, double) { return 1.0; },
      [](const Tensor&, std::span<const Tensor> t) { return t[0]; });
}

Tensor mul_scalar(const Tensor& a, const Tensor& s) {
  require_defined("mul_scalar", a);
  require_defined("mul_scalar", s);
  if (s.size() != 1) throw invalid_argument("mul_scalar: scale must be 1x1, got " + shape_str(s));
  double k = s.item();
  auto x = a.values();
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] * k;
  BackwardFn bw = [](Node& self) {
    Node& pa = P(self, 0);
    Node& ps = P(self, 1);
    if (pa.requires_grad) {
      auto g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * ps.value[0];
    }
    if (ps.requires_grad) {
      double acc = 0.0;
      for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * pa.value[i];
      ps.grad_buffer()[0] += acc;
    }
  };
  JvpFn jv = [a, s](const Tensor&, std::span<const Tensor> t) {
    Tensor r0 = t[0].defined() ? mul_scalar(t[0], s) : Tensor();
    Tensor r1 = t[1].defined() ? mul_scalar(a, t[1]) : Tensor();
    return add_defined(r0, r1);
  };
  return make_op("mul_scalar", a.rows(), a.cols(), std::move(z), {a, s}, std::move(bw), std::move(jv));
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  require_defined("add_row", a);
  require_defined("add_row", row);
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw invalid_argument("add_row: expected [1," + std::to_string(a.cols()) + "], got " + shape_str(row));
  }
  const std::size_t R = a.rows(), C = a.cols();
  auto x = a.values(), b = row.values();
  std::vector<double> z(R * C);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) z[r * C + c] = x[r * C + c] + b[c];
  BackwardFn bw = [R, C](Node& self) {
    Node& pa = P(self, 0);
    Node& pb = P(self, 1);
    if (pa.requires_grad) {
      auto g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      auto g = pb.grad_buffer();
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c) g[c] += self.grad[r * C + c];
    }
  };
  JvpFn jv = [R, C](const Tensor&, std::span<const Tensor> t) {
    if (!t[1].defined()) return t[0];
    return add_row(or_zeros(t[0], R, C), t[1]);
  };
  return make_op("add_row", R, C, std::move(z), {a, row}, std::move(bw), std::move(jv));
}

Tensor mul_col(const Tensor& a, const Tensor& col) {
  require_defined("mul_col", a);
  require_defined("mul_col", col);
  if (col.cols() != 1 || col.rows() != a.rows()) {
    throw invalid_argument("mul_col: expected [" + std::to_string(a.rows()) + ",1], got " + shape_str(col));
  }
  const std::size_t R = a.rows(), C = a.cols();
  auto x = a.values(), s = col.values();
  std::vector<double> z(R * C);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) z[r * C + c] = x[r * C + c] * s[r];
  BackwardFn bw = [R, C](Node& self) {
    Node& pa = P(self, 0);
    Node& ps = P(self, 1);
    if (pa.requires_grad) {
      auto g = pa.grad_buffer();
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c) g[r * C + c] += self.grad[r * C + c] * ps.value[r];
    }
    if (ps.requires_grad) {
      auto g = ps.grad_buffer();
      for (std::size_t r = 0; r < R; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < C; ++c) acc += self.grad[r * C + c] * pa.value[r * C + c];
        g[r] += acc;
      }
    }
  };
  JvpFn jv = [a, col](const Tensor&, std::span<const Tensor> t) {
    Tensor r0 = t[0].defined() ? mul_col(t[0], col) : Tensor();
    Tensor r1 = t[1].defined() ? mul_col(a, t[1]) : Tensor();
    return add_defined(r0, r1);
  };
  return make_op("mul_col", R, C, std::move(z), {a, col}, std::move(bw), std::move(jv));
}

Tensor linear(const Tensor& x, const Tensor& w) {
  require_defined("linear", x);
  require_defined("linear", w);
  if (x.cols() != w.cols()) {
    throw invalid_argument("linear: input " + shape_str(x) + " incompatible with weight " + shape_str(w));
  }
  const std::size_t R = x.rows(), N = x.cols(), M = w.rows();
  auto xv = x.values(), wv = w.values();
  std::vector<double> z(R * M, 0.0);
  for (std::size_t r = 0; r < R; ++r) {
    const double* xr = xv.data() + r * N;
    for (std::size_t m = 0; m < M; ++m) {
      const double* wm = wv.data() + m * N;
      double acc = 0.0;
      for (std::size_t k = 0; k < N; ++k) acc += xr[k] * wm[k];
      z[r * M + m] = acc;
    }
  }
  BackwardFn bw = [R, N, M](Node& self) {
    Node& px = P(self, 0);
    Node& pw = P(self, 1);
    const double* g = self.grad.data();
    if (px.requires_grad) {
      auto gx = px.grad_buffer();
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t m = 0; m < M; ++m) {
          double gm = g[r * M + m];
          if (gm == 0.0) continue;
          const double* wm = pw.value.data() + m * N;
          double* gxr = gx.data() + r * N;
          for (std::size_t k = 0; k < N; ++k) gxr[k] += gm * wm[k];
        }
    }
    if (pw.requires_grad) {
      auto gw = pw.grad_buffer();
      for (std::size_t r = 0; r < R; ++r) {
        const double* xr = px.value.data() + r * N;
        for (std::size_t m = 0; m < M; ++m) {
          double gm = g[r * M + m];
          if (gm == 0.0) continue;
          double* gwm = gw.data() + m * N;
          for (std::size_t k = 0; k < N; ++k) gwm[k] += gm * xr[k];
        }
      }
    }
  };
  JvpFn jv = [x, w](const Tensor&, std::span<const Tensor> t) {
    Tensor r0 = t[0].defined() ? linear(t[0], w) : Tensor();
    Tensor r1 = t[1].defined() ? linear(x, t[1]) : Tensor();
    return add_defined(r0, r1);
  };
  return make_op("linear", R, M, std::move(z), {x, w}, std::move(bw), std::move(jv));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined("matmul", a);
  require_defined("matmul", b);
  if (a.cols() != b.rows()) throw invalid_argument("matmul: " + shape_str(a) + " x " + shape_str(b));
  const std::size_t R = a.rows(), K = a.cols(), C = b.cols();
  auto av = a.values(), bv = b.values();
  std::vector<double> z(R * C, 0.0);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t k = 0; k < K; ++k) {
      double ark = av[r * K + k];
      if (ark == 0.0) continue;
      for (std::size_t c = 0; c < C; ++c) z[r * C + c] += ark * bv[k * C + c];
    }
  BackwardFn bw = [R, K, C](Node& self) {
    Node& pa = P(self, 0);
    Node& pb = P(self, 1);
    const double* g = self.grad.data();
    if (pa.requires_grad) {
      auto ga = pa.grad_buffer();
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t k = 0; k < K; ++k) {
          double acc = 0.0;
          for (std::size_t c = 0; c < C; ++c) acc += g[r * C + c] * pb.value[k * C + c];
          ga[r * K + k] += acc;
        }
    }
    if (pb.requires_grad) {
      auto gb = pb.grad_buffer();
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t k = 0; k < K; ++k) {
          double ark = pa.value[r * K + k];
          if (ark == 0.0) continue;
          for (std::size_t c = 0; c < C; ++c) gb[k * C + c] += ark * g[r * C + c];
        }
    }
  };
  JvpFn jv = [a, b](const Tensor&, std::span<const Tensor> t) {
    Tensor r0 = t[0].defined() ? matmul(t[0], b) : Tensor();
    Tensor r1 = t[1].defined() ? matmul(a, t[1]) : Tensor();
    return add_defined(r0, r1);
  };
  return make_op("matmul", R, C, std::move(z), {a, b}, std::move(bw), std::move(jv));
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      "sigmoid", a,
      [](double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
      [](double, double y) { return y * (1.0 - y); },
      [](const Tensor& self, std::span<const Tensor> t) {
        return mul(t[0], mul(self, add_scalar(neg(self), 1.0)));
      });
}

Tensor relu(const Tensor& a) {
  return unary(
      "relu", a, [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; },
      [a](const Tensor&, std::span<const Tensor> t) { return mul(t[0], mask_of(a, 0.0)); });
}

Tensor exp(const Tensor& a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; },
      [](const Tensor& self, std::span<const Tensor> t) { return mul(t[0], self); });
}

Tensor log(const Tensor& a) {
  return unary(
      "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; },
      [a](const Tensor&, std::span<const Tensor> t) { return mul(t[0], reciprocal(a)); });
}

Tensor cosh(const Tensor& a) {
  return unary(
      "cosh", a, [](double x) { return std::cosh(x); }, [](double x, double) { return std::sinh(x); },
      [a](const Tensor&, std::span<const Tensor> t) { return mul(t[0], sinh(a)); });
}

Tensor sinh(const Tensor& a) {
  return unary(
      "sinh", a, [](double x) { return std::sinh(x); }, [](double x, double) { return std::cosh(x); },
      [a](const Tensor&, std::span<const Tensor> t) { return mul(t[0], cosh(a)); });
}

Tensor sqrt(const Tensor& a) {
  return unary(
      "sqrt", a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; },
      [](const Tensor& self, std::span<const Tensor> t) { return mul(t[0], scale(reciprocal(self), 0.5)); });
}

Tensor square(const Tensor& a) {
  return unary(
      "square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; },
      [a](const Tensor&, std::span<const Tensor> t) { return mul(t[0], scale(a, 2.0)); });
}

Tensor abs(const Tensor& a) {
  return unary(
      "abs", a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); },
      [a](const Tensor&, std::span<const Tensor> t) {
        std::vector<double> s(a.size());
        auto x = a.values();
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = x[i] > 0 ? 1.0 : (x[i] < 0 ? -1.0 : 0.0);
        return mul(t[0], constant(a.rows(), a.cols(), std::move(s)));
      });
}

Tensor reciprocal(const Tensor& a) {
  return unary(
      "reciprocal", a, [](double x) { return 1.0 / x; }, [](double, double y) { return -y * y; },
      [](const Tensor& self, std::span<const Tensor> t) { return neg(mul(t[0], square(self))); });
}

Tensor clamp_min(const Tensor& a, double lo) {
  return unary(
      "clamp_min", a, [lo](double x) { return std::max(x, lo); },
      [lo](double x, double) { return x > lo ? 1.0 : 0.0; },
      [a, lo](const Tensor&, std::span<const Tensor> t) { return mul(t[0], mask_of(a, lo)); });
}

namespace {
constexpr double kAcoshGradFloor = 1.0 + 1e-12;
}

Tensor acosh(const Tensor& a) {
  return unary(
      "acosh", a, [](double x) { return std::acosh(std::max(x, lorentz::kAcoshFloor)); },
      [](double x, double) {
        double c = std::max(x, kAcoshGradFloor);
        return 1.0 / std::sqrt(c * c - 1.0);
      },
      [a](const Tensor&, std::span<const Tensor> t) {
        return mul(t[0], reciprocal(sqrt(add_scalar(square(clamp_min(a, kAcoshGradFloor)), -1.0))));
      });
}

namespace {
constexpr double kSeriesCutoff = 1e-4;
}

Tensor asinh_sqrt_ratio(const Tensor& q) {
  return unary(
      "asinh_sqrt_ratio", q,
      [](double x) {
        x = std::max(x, 0.0);
        if (x < kSeriesCutoff) return 1.0 - x / 6.0 + 3.0 * x * x / 40.0 - 5.0 * x * x * x / 112.0;
        double s = std::sqrt(x);
        return std::asinh(s) / s;
      },
      [](double x, double) {
        x = std::max(x, 0.0);
        if (x < kSeriesCutoff) return -1.0 / 6.0 + 3.0 * x / 20.0 - 15.0 * x * x / 112.0;
        double s = std::sqrt(x);
        return (s / std::sqrt(1.0 + x) - std::asinh(s)) / (2.0 * s * x);
      },
      no_jvp("asinh_sqrt_ratio"));
}

Tensor sinh_sqrt_ratio(const Tensor& q) {
  return unary(
      "sinh_sqrt_ratio", q,
      [](double x) {
        x = std::max(x, 0.0);
        if (x < kSeriesCutoff) return 1.0 + x / 6.0 + x * x / 120.0 + x * x * x / 5040.0;
        double s = std::sqrt(x);
        return std::sinh(s) / s;
      },
      [](double x, double) {
        x = std::max(x, 0.0);
        if (x < kSeriesCutoff) return 1.0 / 6.0 + x / 60.0 + x * x / 1680.0;
        double s = std::sqrt(x);
        return (s * std::cosh(s) - std::sinh(s)) / (2.0 * s * x);
      },
      no_jvp("sinh_sqrt_ratio"));
}

Tensor row_sum(const Tensor& a) {
  require_defined("row_sum", a);
  const std::size_t R = a.rows(), C = a.cols();
  auto x = a.values();
  std::vector<double> z(R, 0.0);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) z[r] += x[r * C + c];
  BackwardFn bw = [R, C](Node& self) {
    Node& p = P(self, 0);
    if (!p.requires_grad) return;
    auto g = p.grad_buffer();
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < C; ++c) g[r * C + c] += self.grad[r];
  };
  JvpFn jv = [](const Tensor&, std::span<const Tensor> t) { return row_sum(t[0]); };
  return make_op("row_sum", R, 1, std::move(z), {a}, std::move(bw), std::move(jv));
}

Tensor sum(const Tensor& a) {
  require_defined("sum", a);
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  BackwardFn bw = [](Node& self) {
    Node& p = P(self, 0);
    if (!p.requires_grad) return;
    auto g = p.grad_buffer();
    for (double& v : g) v += self.grad[0];
  };
  JvpFn jv = [](const Tensor&, std::span<const Tensor> t) { return sum(t[0]); };
  return make_op("sum", 1, 1, {acc}, {a}, std::move(bw), std::move(jv));
}

Tensor mean(const Tensor& a) {
  require_defined("mean", a);
  if (a.size() == 0) throw invalid_argument("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor row_norm(const Tensor& a) { return sqrt(row_sum(square(a))); }

Tensor lorentz_rows(const Tensor& a, const Tensor& b) {
  require_same_shape("lorentz_rows", a, b);
  const std::size_t R = a.rows(), C = a.cols();
  if (C < 2) throw invalid_argument("lorentz_rows: need at least 2 columns");
  auto x = a.values(), y = b.values();
  std::vector<double> z(R);
  for (std::size_t r = 0; r < R; ++r) z[r] = lorentz::lorentz_inner(x.subspan(r * C, C), y.subspan(r * C, C));
  BackwardFn bw = [R, C](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      Node& p = P(self, k);
      if (!p.requires_grad) continue;
      const auto& other = P(self, 1 - k).value;
      auto g = p.grad_buffer();
      for (std::size_t r = 0; r < R; ++r) {
        g[r * C] -= self.grad[r] * other[r * C];
        for (std::size_t c = 1; c < C; ++c) g[r * C + c] += self.grad[r] * other[r * C + c];
      }
    }
  };
  JvpFn jv = [a, b](const Tensor&, std::span<const Tensor> t) {
    Tensor r0 = t[0].defined() ? lorentz_rows(t[0], b) : Tensor();
    Tensor r1 = t[1].defined() ? lorentz_rows(a, t[1]) : Tensor();
    return add_defined(r0, r1);
  };
  return make_op("lorentz_rows", R, 1, std::move(z), {a, b}, std::move(bw), std::move(jv));
}

Tensor flip_time(const Tensor& a) {
  require_defined("flip_time", a);
  const std::size_t R = a.rows(), C = a.cols();
  std::vector<double> z(a.values().begin(), a.values().end());
  for (std::size_t r = 0; r < R; ++r) z[r * C] = -z[r * C];
  BackwardFn bw = [R, C](Node& self) {
    Node& p = P(self, 0);
    if (!p.requires_grad) return;
    auto g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += (i % C == 0 ? -1.0 : 1.0) * self.grad[i];
    (void)R;
  };
  JvpFn jv = [](const Tensor&, std::span<const Tensor> t) { return flip_time(t[0]); };
  return make_op("flip_time", R, C, std::move(z), {a}, std::move(bw), std::move(jv));
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw invalid_argument("concat_cols: no inputs");
  const std::size_t R = parts[0].rows();
  std::vector<std::size_t> offs;
  std::size_t C = 0;
  for (const auto& p : parts) {
    require_defined("concat_cols", p);
    if (p.rows() != R) throw invalid_argument("concat_cols: row count mismatch");
    offs.push_back(C);
    C += p.cols();
  }
  std::vector<double> z(R * C);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::size_t pc = parts[k].cols();
    auto v = parts[k].values();
    for (std::size_t r = 0; r < R; ++r)
      std::copy_n(v.data() + r * pc, pc, z.data() + r * C + offs[k]);
  }
  BackwardFn bw = [R, C, offs](Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node& p = P(self, k);
      if (!p.requires_grad) continue;
      auto g = p.grad_buffer();
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < p.cols; ++c) g[r * p.cols + c] += self.grad[r * C + offs[k] + c];
    }
  };
  JvpFn jv = [](const Tensor& self, std::span<const Tensor> t) {
    std::vector<Tensor> ts;
    for (std::size_t k = 0; k < t.size(); ++k) {
      const Tensor& p = self.node()->parents[k];
      ts.push_back(or_zeros(t[k], p.rows(), p.cols()));
    }
    return concat_cols(ts);
  };
  return make_op("concat_cols", R, C, std::move(z), std::vector<Tensor>(parts.begin(), parts.end()), std::move(bw),
                 std::move(jv));
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw invalid_argument("concat_rows: no inputs");
  const std::size_t C = parts[0].cols();
  std::size_t R = 0;
  std::vector<double> z;
  for (const auto& p : parts) {
    require_defined("concat_rows", p);
    if (p.cols() != C) throw invalid_argument("concat_rows: column count mismatch");
    R += p.rows();
    z.insert(z.end(), p.values().begin(), p.values().end());
  }
  BackwardFn bw = [](Node& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node& p = P(self, k);
      if (p.requires_grad) {
        auto g = p.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[off + i];
      }
      off += p.value.size();
    }
  };
  JvpFn jv = [](const Tensor& self, std::span<const Tensor> t) {
    std::vector<Tensor> ts;
    for (std::size_t k = 0; k < t.size(); ++k) {
      const Tensor& p = self.node()->parents[k];
      ts.push_back(or_zeros(t[k], p.rows(), p.cols()));
    }
    return concat_rows(ts);
  };
  return make_op("concat_rows", R, C, std::move(z), std::vector<Tensor>(parts.begin(), parts.end()), std::move(bw),
                 std::move(jv));
}

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t len) {
  require_defined("slice_cols", a);
  if (len == 0 || start + len > a.cols()) throw invalid_argument("slice_cols: range out of bounds");
  const std::size_t R = a.rows(), C = a.cols();
  auto x = a.values();
  std::vector<double> z(R * len);
  for (std::size_t r = 0; r < R; ++r) std::copy_n(x.data() + r * C + start, len, z.data() + r * len);
  BackwardFn bw = [R, C, start, len](Node& self) {
    Node& p = P(self, 0);
    if (!p.requires_grad) return;
    auto g = p.grad_buffer();
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < len; ++c) g[r * C + start + c] += self.grad[r * len + c];
  };
  JvpFn jv = [start, len](const Tensor&, std::span<const Tensor> t) { return slice_cols(t[0], start, len); };
  return make_op("slice_cols", R, len, std::move(z), {a}, std::move(bw), std::move(jv));
}

Tensor slice_rows(const Tensor& a, std::size_t start, std::size_t len) {
  require_defined("slice_rows", a);
  if (len == 0 || start + len > a.rows()) throw invalid_argument("slice_rows: range out of bounds");
  const std::size_t C = a.cols();
  auto x = a.values();
  std::vector<double> z(x.begin() + static_cast<std::ptrdiff_t>(start * C),
                        x.begin() + static_cast<std::ptrdiff_t>((start + len) * C));
  BackwardFn bw = [C, start](Node& self) {
    Node& p = P(self, 0);
    if (!p.requires_grad) return;
    auto g = p.grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[start * C + i] += self.grad[i];
  };
  JvpFn jv = [start, len](const Tensor&, std::span<const Tensor> t) { return slice_rows(t[0], start, len); };
  return make_op("slice_rows", len, C, std::move(z), {a}, std::move(bw), std::move(jv));
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows) {
  require_defined("gather_rows", a);
  const std::size_t C = a.cols();
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  auto x = a.values();
  std::vector<double> z(idx.size() * C);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= a.rows()) throw invalid_argument("gather_rows: index out of range");
    std::copy_n(x.data() + idx[i] * C, C, z.data() + i * C);
  }
  BackwardFn bw = [C, idx](Node& self) {
    Node& p = P(self, 0);
    if (!p.requires_grad) return;
    auto g = p.grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t c = 0; c < C; ++c) g[idx[i] * C + c] += self.grad[i * C + c];
  };
  JvpFn jv = [idx](const Tensor&, std::span<const Tensor> t) { return gather_rows(t[0], idx); };
  return make_op("gather_rows", idx.size(), C, std::move(z), {a}, std::move(bw), std::move(jv));
}

Tensor log_softmax_rows(const Tensor& a) {
  require_defined("log_softmax_rows", a);
  const std::size_t R = a.rows(), C = a.cols();
  auto x = a.values();
  std::vector<double> z(R * C);
  for (std::size_t r = 0; r < R; ++r) {
    const double* xr = x.data() + r * C;
    double mx = *std::max_element(xr, xr + C);
    double s = 0.0;
    for (std::size_t c = 0; c < C; ++c) s += std::exp(xr[c] - mx);
    double lse = mx + std::log(s);
    for (std::size_t c = 0; c < C; ++c) z[r * C + c] = xr[c] - lse;
  }
  BackwardFn bw = [R, C](Node& self) {
    Node& p = P(self, 0);
    if (!p.requires_grad) return;
    auto g = p.grad_buffer();
    for (std::size_t r = 0; r < R; ++r) {
      double gs = 0.0;
      for (std::size_t c = 0; c < C; ++c) gs += self.grad[r * C + c];
      for (std::size_t c = 0; c < C; ++c)
        g[r * C + c] += self.grad[r * C + c] - std::exp(self.value[r * C + c]) * gs;
    }
  };
  JvpFn jv = [R, C](const Tensor& self, std::span<const Tensor> t) {
    Tensor dot = row_sum(mul(exp(self), t[0]));
    return sub(t[0], mul_col(full(R, C, 1.0), dot));
  };
  return make_op("log_softmax_rows", R, C, std::move(z), {a}, std::move(bw), std::move(jv));
}

Tensor softmax_rows(const Tensor& a) { return exp(log_softmax_rows(a)); }

Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> labels) {
  return neg(mean(pick(log_softmax_rows(logits), std::vector<std::size_t>(labels.begin(), labels.end()))));
}

void backward(const Tensor& root) {
  require_defined("backward", root);
  if (root.size() != 1) throw invalid_argument("backward: root must be 1x1, got " + shape_str(root));
  if (!root.requires_grad()) return;
  auto order = topo_order(root);
  root.node()->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node& n = *it->node();
    if (n.parents.empty()) continue;
    if (!n.grad.empty() && n.backward) n.backward(n);
    // Intermediate gradients are consumed; only leaves keep theirs.
    n.grad.clear();
    n.grad.shrink_to_fit();
  }
}

Tensor jvp(const Tensor& output, const Tensor& input, const Tensor& direction) {
  require_defined("jvp", output);
  require_same_shape("jvp", input, direction);
  if (!output.requires_grad()) return zeros(output.rows(), output.cols());
  auto order = topo_order(output);
  std::unordered_map<Node*, Tensor> tangent;
  tangent[input.node()] = direction;
  for (const Tensor& t : order) {
    Node& n = *t.node();
    if (&n == input.node() || n.parents.empty()) continue;
    std::vector<Tensor> pt(n.parents.size());
    bool any = false;
    for (std::size_t i = 0; i < n.parents.size(); ++i) {
      auto f = tangent.find(n.parents[i].node());
      if (f != tangent.end()) {
        pt[i] = f->second;
        any = true;
      }
    }
    if (!any) continue;
    tangent[&n] = n.jvp(t, pt);
  }
  auto f = tangent.find(output.node());
  if (f == tangent.end()) return zeros(output.rows(), output.cols());
  return f->second;
}

Tensor lift_rows(const Tensor& spatial, lorentz::Curvature k) {
  Tensor t = sqrt(add_scalar(row_sum(square(spatial)), -1.0 / k.value()));
  std::vector<Tensor> parts{t, spatial};
  return concat_cols(parts);
}

Tensor riemannian_grad_rows(const Tensor& base, const Tensor& euclid_grad, lorentz::Curvature k) {
  Tensor h = flip_time(euclid_grad);
  Tensor c = scale(lorentz_rows(base, h), -k.value());
  return add(h, mul_col(base, c));
}

FdReport fd_check(const std::function<Tensor(std::span<const Tensor>)>& f, std::span<const Tensor> inputs,
                  double h) {
  std::vector<Tensor> in(inputs.begin(), inputs.end());
  for (auto& t : in) t.zero_grad();
  backward(f(in));
  std::vector<std::vector<double>> analytic;
  for (auto& t : in) {
    auto g = t.grad();
    analytic.emplace_back(g.begin(), g.end());
    if (analytic.back().empty()) analytic.back().assign(t.size(), 0.0);
  }
  FdReport rep;
  for (std::size_t k = 0; k < in.size(); ++k) {
    auto v = in[k].mutable_values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      double orig = v[i];
      v[i] = orig + h;
      double fp = f(in).item();
      v[i] = orig - h;
      double fm = f(in).item();
      v[i] = orig;
      double num = (fp - fm) / (2.0 * h);
      double a = analytic[k][i];
      double err = std::abs(a - num);
      double rel = err / std::max({std::abs(a), std::abs(num), 1e-3});
      rep.max_abs_error = std::max(rep.max_abs_error, err);
      rep.max_rel_error = std::max(rep.max_rel_error, rel);
      ++rep.checked;
    }
  }
  return rep;
}

}  // namespace haegan::ad
