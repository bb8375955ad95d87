#pragma once

// Hyperbolic layers over batched rows. A batch of B points of L^n_K is a
// B x (n+1) tensor whose rows are ambient coordinates [time, spatial...].

#include <cstddef>
#include <string>
#include <vector>

#include "haegan/autodiff.hpp"
#include "haegan/lorentz.hpp"
#include "haegan/rng.hpp"

namespace haegan::nn {

using ad::Tensor;
using lorentz::Curvature;

// A trainable tensor. Manifold parameters hold one point per row.
struct ParamRef {
  std::string name;
  Tensor tensor;
  bool manifold = false;
  Curvature k{};
};
using ParamList = std::vector<ParamRef>;

struct Context {
  bool training = false;
  Rng* rng = nullptr;  // required when training with dropout
};

enum class Activation { Identity, Relu };

Tensor init_normal(std::size_t rows, std::size_t cols, double sd, Rng& rng);

// Batched geometry on rows.
Tensor points_to_rows(std::span<const lorentz::LorentzPoint> pts);
std::vector<lorentz::LorentzPoint> rows_to_points(const Tensor& rows, Curvature k);
Tensor e2h_rows(const Tensor& euclid, Curvature k);
Tensor direct_concat_rows(std::span<const Tensor> parts, Curvature k);
Tensor tangent_concat_rows(std::span<const Tensor> parts, Curvature k);
// Distance matrix d_L(x_b, c_j) for rows of x and rows of c.
Tensor distance_rows(const Tensor& x, const Tensor& c, Curvature k);
// Weighted centroids: weights is G x P over the P rows of points; result G x (n+1).
Tensor centroid_rows(const Tensor& points, const Tensor& weights, Curvature k);
// Projects rows that are positive combinations of manifold points back onto
// the manifold; centroid_rows is normalize_rows(weights * points).
Tensor normalize_rows(const Tensor& s, Curvature k);

struct HLinearOptions {
  Activation activation = Activation::Identity;
  double dropout = 0.0;
  bool bias = true;
  Curvature k{};
};

class HLinear {
 public:
  HLinear() = default;
  // Maps L^in_dim_K to L^out_dim_K (spatial dimensions).
  HLinear(std::size_t in_dim, std::size_t out_dim, Rng& rng, HLinearOptions opts = {});

  Tensor forward(const Tensor& x, const Context& ctx = {}) const;
  void collect(ParamList& out, const std::string& prefix) const;

  std::size_t in_dim() const { return in_dim_; }
  std::size_t out_dim() const { return out_dim_; }
  const HLinearOptions& options() const { return opts_; }

  Tensor W, v, b, b_prime, rho;

 private:
  std::size_t in_dim_ = 0, out_dim_ = 0;
  HLinearOptions opts_;
};

// Distances to m trainable centroids.
class HCDist {
 public:
  HCDist() = default;
  HCDist(std::size_t in_dim, std::size_t m, Rng& rng, Curvature k = Curvature{});

  Tensor forward(const Tensor& x) const;
  void collect(ParamList& out, const std::string& prefix) const;
  Curvature curvature() const { return k_; }

  Tensor centroids;

 private:
  Curvature k_;
};

// x'_v = centroid of HLinear(x_u) over u in N(v), with unit weights.
class HGCN {
 public:
  HGCN() = default;
  HGCN(std::size_t in_dim, std::size_t out_dim, Rng& rng, HLinearOptions opts = {});

  // adjacency: N x N constant 0/1 matrix that must include self-loops.
  Tensor forward(const Tensor& x, const Tensor& adjacency, const Context& ctx = {}) const;
  void collect(ParamList& out, const std::string& prefix) const;

  HLinear linear;
};

// e2h(W x) for Euclidean inputs x.
class HEmbed {
 public:
  HEmbed() = default;
  HEmbed(std::size_t in_dim, std::size_t out_dim, Rng& rng, Curvature k = Curvature{});

  Tensor forward(const Tensor& x) const;
  void collect(ParamList& out, const std::string& prefix) const;

  Tensor W;

 private:
  Curvature k_;
};

struct WrappedNormal {
  WrappedNormal(lorentz::LorentzPoint mean, std::vector<double> diag_cov);
  lorentz::LorentzPoint mean;
  std::vector<double> diag_cov;
};

lorentz::LorentzPoint wrapped_normal_sample(const WrappedNormal& spec, Rng& rng);
// batch x (n+1) constant tensor of samples from the wrapped normal at the origin with identity covariance.
Tensor wrapped_normal_origin_rows(std::size_t batch, std::size_t n, Rng& rng, Curvature k = Curvature{});

}  // namespace haegan::nn
