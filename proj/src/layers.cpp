#include "haegan/layers.hpp"

#include <cmath>
#include <string>

#include "haegan/error.hpp"

namespace haegan::nn {

using namespace ad;

Tensor init_normal(std::size_t rows, std::size_t cols, double sd, Rng& rng) {
  return parameter(rows, cols, normal_vector(rng, rows * cols, sd));
}

Tensor points_to_rows(std::span<const lorentz::LorentzPoint> pts) {
  if (pts.empty()) throw invalid_argument("points_to_rows: empty point list");
  const std::size_t c = pts[0].coords().size();
  std::vector<double> v;
  v.reserve(pts.size() * c);
  for (const auto& p : pts) {
    if (p.coords().size() != c) throw invalid_argument("points_to_rows: mixed dimensions");
    v.insert(v.end(), p.coords().begin(), p.coords().end());
  }
  return constant(pts.size(), c, std::move(v));
}

std::vector<lorentz::LorentzPoint> rows_to_points(const Tensor& rows, Curvature k) {
  std::vector<lorentz::LorentzPoint> out;
  const std::size_t c = rows.cols();
  auto v = rows.values();
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    out.push_back(lorentz::LorentzPoint::from_spatial(v.subspan(r * c + 1, c - 1), k));
  }
  return out;
}

Tensor e2h_rows(const Tensor& euclid, Curvature k) {
  Tensor q = scale(row_sum(square(euclid)), -k.value());
  // sinh(sqrt(-K)|t|) / (sqrt(-K)|t|) * t, then recompute time.
  return lift_rows(mul_col(euclid, sinh_sqrt_ratio(q)), k);
}

Tensor direct_concat_rows(std::span<const Tensor> parts, Curvature k) {
  if (parts.size() < 2) throw invalid_argument("direct_concat_rows: need at least two inputs");
  std::vector<Tensor> cols;
  Tensor tsq;
  for (const auto& p : parts) {
    Tensor t = square(slice_cols(p, 0, 1));
    tsq = tsq.defined() ? add(tsq, t) : t;
  }
  const double n_minus_1 = static_cast<double>(parts.size() - 1);
  cols.push_back(sqrt(add_scalar(tsq, n_minus_1 / k.value())));
  for (const auto& p : parts) cols.push_back(slice_cols(p, 1, p.cols() - 1));
  return concat_cols(cols);
}

Tensor tangent_concat_rows(std::span<const Tensor> parts, Curvature k) {
  if (parts.size() < 2) throw invalid_argument("tangent_concat_rows: need at least two inputs");
  std::vector<Tensor> tangents;
  for (const auto& p : parts) {
    // Spatial part of log_o(x): asinh(sqrt(-K)|s|) / (sqrt(-K)|s|) * s
    Tensor s = slice_cols(p, 1, p.cols() - 1);
    Tensor q = scale(row_sum(square(s)), -k.value());
    tangents.push_back(mul_col(s, asinh_sqrt_ratio(q)));
  }
  return e2h_rows(concat_cols(tangents), k);
}

Tensor distance_rows(const Tensor& x, const Tensor& c, Curvature k) {
  Tensor gram = linear(flip_time(x), c);
  return scale(acosh(scale(gram, k.value())), 1.0 / k.sqrt_neg());
}

Tensor centroid_rows(const Tensor& points, const Tensor& weights, Curvature k) {
  if (weights.cols() != points.rows()) throw invalid_argument("centroid_rows: weights do not match points");
  for (std::size_t g = 0; g < weights.rows(); ++g) {
    double s = 0.0;
    for (std::size_t p = 0; p < weights.cols(); ++p) {
      double w = weights.at(g, p);
      if (!(w >= 0.0)) throw invalid_argument("centroid_rows: weights must be non-negative");
      s += w;
    }
    if (!(s > 0.0)) throw invalid_argument("centroid_rows: weights sum to zero in row " + std::to_string(g));
  }
  return normalize_rows(matmul(weights, points), k);
}

Tensor normalize_rows(const Tensor& s, Curvature k) {
  Tensor den = scale(sqrt(abs(lorentz_rows(s, s))), k.sqrt_neg());
  return lift_rows(mul_col(slice_cols(s, 1, s.cols() - 1), reciprocal(den)), k);
}

HLinear::HLinear(std::size_t in_dim, std::size_t out_dim, Rng& rng, HLinearOptions opts)
    : in_dim_(in_dim), out_dim_(out_dim), opts_(opts) {
  if (in_dim == 0 || out_dim == 0) throw invalid_argument("HLinear: dimensions must be positive");
  if (opts.dropout < 0.0 || opts.dropout >= 1.0) throw invalid_argument("HLinear: dropout must be in [0, 1)");
  const double sd = 1.0 / std::sqrt(static_cast<double>(in_dim + 1));
  W = init_normal(out_dim, in_dim + 1, sd, rng);
  v = init_normal(1, in_dim + 1, sd, rng);
  b = parameter(1, out_dim, std::vector<double>(out_dim, 0.0));
  b_prime = parameter(1, 1, {0.0});
  rho = parameter(1, 1, {0.0});
}

Tensor HLinear::forward(const Tensor& x, const Context& ctx) const {
  if (x.cols() != in_dim_ + 1) {
    throw invalid_argument("HLinear: expected " + std::to_string(in_dim_ + 1) + " columns, got " +
                           std::to_string(x.cols()));
  }
  Tensor tx = opts_.activation == Activation::Relu ? relu(x) : x;
  Tensor u = linear(tx, W);
  if (opts_.bias) u = add_row(u, b);
  if (ctx.training && opts_.dropout > 0.0) {
    if (!ctx.rng) throw invalid_argument("HLinear: dropout needs an rng");
    std::bernoulli_distribution keep(1.0 - opts_.dropout);
    std::vector<double> mask(u.size());
    for (auto& m : mask) m = keep(*ctx.rng) ? 1.0 / (1.0 - opts_.dropout) : 0.0;
    u = mul(u, constant(u.rows(), u.cols(), std::move(mask)));
  }
  Tensor nrm = row_norm(u);
  for (double n : nrm.values()) {
    if (!(n >= 1e-12)) {
      throw Error(ErrorKind::Numerical, "HLinear: degenerate direction, |W tau(x) + b| = " + std::to_string(n));
    }
  }
  Tensor gate = linear(x, v);
  if (opts_.bias) gate = add_row(gate, b_prime);
  Tensor radius = mul_scalar(sigmoid(gate), exp(rho));
  Tensor h = mul_col(u, mul(radius, reciprocal(nrm)));
  return lift_rows(h, opts_.k);
}

void HLinear::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".W", W, false, opts_.k});
  out.push_back({prefix + ".v", v, false, opts_.k});
  if (opts_.bias) {
    out.push_back({prefix + ".b", b, false, opts_.k});
    out.push_back({prefix + ".b_prime", b_prime, false, opts_.k});
  }
  out.push_back({prefix + ".rho", rho, false, opts_.k});
}

HCDist::HCDist(std::size_t in_dim, std::size_t m, Rng& rng, Curvature k) : k_(k) {
  if (in_dim == 0 || m == 0) throw invalid_argument("HCDist: dimensions must be positive");
  std::vector<lorentz::LorentzPoint> pts;
  WrappedNormal wn(lorentz::LorentzPoint::origin(in_dim, k), std::vector<double>(in_dim, 1.0));
  for (std::size_t j = 0; j < m; ++j) pts.push_back(wrapped_normal_sample(wn, rng));
  Tensor c = points_to_rows(pts);
  centroids = parameter(c.rows(), c.cols(), std::vector<double>(c.values().begin(), c.values().end()));
}

Tensor HCDist::forward(const Tensor& x) const {
  if (x.cols() != centroids.cols()) throw invalid_argument("HCDist: input dimension mismatch");
  return distance_rows(x, centroids, k_);
}

void HCDist::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".centroids", centroids, true, k_});
}

HGCN::HGCN(std::size_t in_dim, std::size_t out_dim, Rng& rng, HLinearOptions opts)
    : linear(in_dim, out_dim, rng, opts) {}

Tensor HGCN::forward(const Tensor& x, const Tensor& adjacency, const Context& ctx) const {
  if (adjacency.rows() != x.rows() || adjacency.cols() != x.rows()) {
    throw invalid_argument("HGCN: adjacency must be N x N for N input rows");
  }
  for (std::size_t i = 0; i < adjacency.rows(); ++i) {
    if (adjacency.at(i, i) == 0.0) {
      throw invalid_argument("HGCN: node " + std::to_string(i) + " has no self-loop");
    }
  }
  return centroid_rows(linear.forward(x, ctx), adjacency, linear.options().k);
}

void HGCN::collect(ParamList& out, const std::string& prefix) const { linear.collect(out, prefix); }

HEmbed::HEmbed(std::size_t in_dim, std::size_t out_dim, Rng& rng, Curvature k) : k_(k) {
  if (in_dim == 0 || out_dim == 0) throw invalid_argument("HEmbed: dimensions must be positive");
  // Keeps |W x| near |x| so embeddings start close to the origin.
  W = init_normal(out_dim, in_dim, 1.0 / std::sqrt(static_cast<double>(out_dim)), rng);
}

Tensor HEmbed::forward(const Tensor& x) const { return e2h_rows(linear(x, W), k_); }

void HEmbed::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".W", W, false, k_});
}

WrappedNormal::WrappedNormal(lorentz::LorentzPoint mean_, std::vector<double> diag_cov_)
    : mean(std::move(mean_)), diag_cov(std::move(diag_cov_)) {
  if (diag_cov.size() != mean.dim()) throw invalid_argument("WrappedNormal: covariance size mismatch");
  for (double c : diag_cov) {
    if (!(c > 0.0)) throw invalid_argument("WrappedNormal: covariance entries must be positive");
  }
}

lorentz::LorentzPoint wrapped_normal_sample(const WrappedNormal& wn, Rng& rng) {
  const std::size_t n = wn.mean.dim();
  const Curvature k = wn.mean.curvature();
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> v(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i + 1] = nd(rng) * std::sqrt(wn.diag_cov[i]);
  const auto o = lorentz::LorentzPoint::origin(n, k);
  const auto u = lorentz::parallel_transport(o, wn.mean, lorentz::TangentVector(o, v));
  return lorentz::exp_map(wn.mean, u);
}

Tensor wrapped_normal_origin_rows(std::size_t batch, std::size_t n, Rng& rng, Curvature k) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> out;
  out.reserve(batch * (n + 1));
  std::vector<double> t(n);
  for (std::size_t b = 0; b < batch; ++b) {
    for (auto& x : t) x = nd(rng);
    auto p = lorentz::e2h(t, k);
    out.insert(out.end(), p.coords().begin(), p.coords().end());
  }
  return constant(batch, n + 1, std::move(out));
}

}  // namespace haegan::nn
