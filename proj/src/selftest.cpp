#include "haegan/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "haegan/error.hpp"
#include "haegan/layers.hpp"
#include "haegan/lorentz.hpp"

namespace haegan::selftest {
namespace {

using ad::Tensor;
using lorentz::Curvature;
using lorentz::LorentzPoint;
using lorentz::TangentVector;

const Curvature kK(-1.0);

LorentzPoint random_point(Rng& rng, std::size_t n, double max_norm) {
  auto s = normal_vector(rng, n);
  double nrm = 0.0;
  for (double x : s) nrm += x * x;
  nrm = std::sqrt(nrm);
  const double r = std::uniform_real_distribution<double>(0.0, max_norm)(rng);
  for (auto& x : s) x *= nrm > 0.0 ? r / nrm : 0.0;
  return LorentzPoint::from_spatial(s, kK);
}

TangentVector random_tangent(Rng& rng, const LorentzPoint& x, double max_norm) {
  auto v = TangentVector::project(x, normal_vector(rng, x.dim() + 1));
  const double nrm = v.norm();
  const double r = std::uniform_real_distribution<double>(0.0, max_norm)(rng);
  std::vector<double> c(v.components().begin(), v.components().end());
  for (auto& e : c) e *= nrm > 0.0 ? r / nrm : 0.0;
  return TangentVector(x, c, 1e-6);
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Relative hyperboloid error of raw coordinates.
double closure_error(std::span<const double> x) { return std::abs(kK.value() * lorentz::lorentz_inner(x, x) - 1.0); }

struct Tracker {
  PropertyResult r;
  Tracker(std::string name, double tol) {
    r.name = std::move(name);
    r.tolerance = tol;
  }
  void add(double err) {
    ++r.cases;
    // NaN must fail, so it is sticky.
    if (std::isnan(err) || std::isnan(r.max_error)) r.max_error = std::nan("");
    else r.max_error = std::max(r.max_error, err);
  }
  PropertyResult done() {
    r.pass = std::isfinite(r.max_error) && r.max_error <= r.tolerance;
    return r;
  }
};

Tensor random_rows(Rng& rng, std::size_t batch, std::size_t n, double max_norm) {
  std::vector<LorentzPoint> pts;
  for (std::size_t i = 0; i < batch; ++i) pts.push_back(random_point(rng, n, max_norm));
  Tensor t = nn::points_to_rows(pts);
  return ad::parameter(t.rows(), t.cols(), {t.values().begin(), t.values().end()});
}

std::vector<Tensor> tensors(const nn::ParamList& ps) {
  std::vector<Tensor> out;
  for (const auto& p : ps) out.push_back(p.tensor);
  return out;
}

using FdCase = std::function<double(Rng&)>;

double fd_error(const std::function<Tensor()>& f, std::vector<Tensor> in) {
  return ad::fd_check([&](std::span<const Tensor>) { return f(); }, in).max_rel_error;
}

std::vector<std::pair<const char*, FdCase>> fd_cases() {
  std::vector<std::pair<const char*, FdCase>> cases;
  cases.emplace_back("grad_hlinear", [](Rng& rng) {
    nn::HLinearOptions opts;
    opts.activation = rng() % 2 ? nn::Activation::Relu : nn::Activation::Identity;
    nn::HLinear lin(8, 8, rng, opts);
    Tensor x = random_rows(rng, 3, 8, 2.0);
    Rng pr(rng());
    Tensor w = ad::constant(3, 9, normal_vector(pr, 27));
    nn::ParamList ps;
    lin.collect(ps, "lin");
    auto in = tensors(ps);
    in.push_back(x);
    return fd_error([&] { return ad::sum(ad::mul(lin.forward(x), w)); }, in);
  });
  cases.emplace_back("grad_hcdist", [](Rng& rng) {
    nn::HCDist d(4, 3, rng);
    Tensor x = random_rows(rng, 3, 4, 2.0);
    Rng pr(rng());
    Tensor w = ad::constant(3, 3, normal_vector(pr, 9));
    return fd_error([&] { return ad::sum(ad::mul(d.forward(x), w)); }, {d.centroids, x});
  });
  cases.emplace_back("grad_hcent", [](Rng& rng) {
    Tensor pts = random_rows(rng, 5, 3, 2.0);
    std::vector<double> wv(10);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (auto& v : wv) v = u(rng);
    Tensor w = ad::parameter(2, 5, wv);
    Rng pr(rng());
    Tensor r = ad::constant(2, 4, normal_vector(pr, 8));
    return fd_error([&] { return ad::sum(ad::mul(nn::centroid_rows(pts, w, kK), r)); }, {pts, w});
  });
  cases.emplace_back("grad_hgcn", [](Rng& rng) {
    nn::HGCN g(3, 3, rng);
    Tensor x = random_rows(rng, 5, 3, 2.0);
    std::vector<double> a(25, 0.0);
    for (std::size_t i = 0; i < 5; ++i) {
      a[i * 5 + i] = 1.0;
      if (i + 1 < 5) a[i * 5 + i + 1] = a[(i + 1) * 5 + i] = 1.0;
    }
    Tensor adj = ad::constant(5, 5, a);
    Rng pr(rng());
    Tensor r = ad::constant(5, 4, normal_vector(pr, 20));
    nn::ParamList ps;
    g.collect(ps, "g");
    auto in = tensors(ps);
    in.push_back(x);
    return fd_error([&] { return ad::sum(ad::mul(g.forward(x, adj), r)); }, in);
  });
  cases.emplace_back("grad_hembed", [](Rng& rng) {
    nn::HEmbed h(3, 5, rng);
    Tensor x = ad::parameter(4, 3, normal_vector(rng, 12));
    Rng pr(rng());
    Tensor r = ad::constant(4, 6, normal_vector(pr, 24));
    return fd_error([&] { return ad::sum(ad::mul(h.forward(x), r)); }, {h.W, x});
  });
  for (bool direct : {true, false}) {
    cases.emplace_back(direct ? "grad_direct_concat" : "grad_tangent_concat", [direct](Rng& rng) {
      Tensor sa = ad::parameter(3, 2, normal_vector(rng, 6)), sb = ad::parameter(3, 3, normal_vector(rng, 9));
      Rng pr(rng());
      Tensor r = ad::constant(3, 6, normal_vector(pr, 18));
      return fd_error(
          [&] {
            std::vector<Tensor> parts{ad::lift_rows(sa, kK), ad::lift_rows(sb, kK)};
            Tensor c = direct ? nn::direct_concat_rows(parts, kK) : nn::tangent_concat_rows(parts, kK);
            return ad::sum(ad::mul(c, r));
          },
          {sa, sb});
    });
  }
  return cases;
}

}  // namespace

Fault parse_fault(const std::string& name) {
  if (name == "none") return Fault::None;
  if (name == "bad_clamp") return Fault::BadClamp;
  throw config_error("unknown fault '" + name + "' (expected none or bad_clamp)");
}

std::vector<PropertyResult> run(const Options& opts) {
  if (opts.cases == 0 || opts.fd_seeds == 0) throw config_error("selftest: cases and fd_seeds must be positive");
  std::vector<PropertyResult> out;
  Rng rng = make_rng(opts.seed, 20);
  const std::size_t n = 5;

  Tracker closure("hyperboloid_closure", 1e-9), roundtrip("exp_log_roundtrip", 1e-6),
      isometry("parallel_transport_isometry", 1e-8), speed("geodesic_speed", 1e-6),
      direct_split("direct_split_concat", 0.0), tangent_split("tangent_split_concat", 1e-6);
  for (std::size_t i = 0; i < opts.cases; ++i) {
    auto x = random_point(rng, n, 3.0), y = random_point(rng, n, 3.0);
    auto v = random_tangent(rng, x, 5.0);

    auto ex = exp_map(x, v);
    std::vector<double> ec(ex.coords().begin(), ex.coords().end());
    if (opts.fault == Fault::BadClamp)
      for (std::size_t c = 1; c < ec.size(); ++c) ec[c] = std::clamp(ec[c], -10.0, 10.0);
    std::vector<LorentzPoint> xy{x, y};
    std::vector<double> w{0.4, 0.6};
    double ce = closure_error(ec);
    ce = std::max(ce, geodesic_point(x, y, 0.3).manifold_error());
    ce = std::max(ce, centroid(xy, w).manifold_error());
    ce = std::max(ce, lorentz::e2h(normal_vector(rng, n), kK).manifold_error());
    closure.add(ce);

    auto back = log_map(x, ex);
    double vn = 0.0;
    for (double c : v.components()) vn += c * c;
    roundtrip.add(max_abs_diff(back.components(), v.components()) / std::max(1.0, std::sqrt(vn)));

    auto u1 = random_tangent(rng, x, 2.0), u2 = random_tangent(rng, x, 2.0);
    auto p1 = parallel_transport(x, y, u1), p2 = parallel_transport(x, y, u2);
    const double before = lorentz::lorentz_inner(u1.components(), u2.components());
    const double after = lorentz::lorentz_inner(p1.components(), p2.components());
    isometry.add(std::abs(before - after) / std::max(1.0, std::abs(before)));

    const double t = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    speed.add(std::abs(distance(x, geodesic_point(x, y, t)) - t * distance(x, y)));

    std::vector<LorentzPoint> parts{random_point(rng, 2, 10.0), random_point(rng, 3, 10.0), random_point(rng, 1, 10.0)};
    std::vector<std::size_t> dims{2, 3, 1};
    auto dc = lorentz::direct_concat(parts);
    auto ds = lorentz::direct_split(dc, dims);
    double de = 0.0;
    for (std::size_t k = 0; k < 3; ++k) de = std::max(de, max_abs_diff(ds[k].coords(), parts[k].coords()));
    direct_split.add(de);
    closure.add(dc.manifold_error());

    std::vector<LorentzPoint> tparts{random_point(rng, 2, 5.0), random_point(rng, 3, 5.0)};
    std::vector<std::size_t> tdims{2, 3};
    auto ts = lorentz::tangent_split(lorentz::tangent_concat(tparts), tdims);
    double te = 0.0;
    for (std::size_t k = 0; k < 2; ++k)
      te = std::max(te, max_abs_diff(ts[k].coords(), tparts[k].coords()) / std::max(1.0, tparts[k].time()));
    tangent_split.add(te);
  }
  for (auto* tr : {&closure, &roundtrip, &isometry, &speed, &direct_split, &tangent_split}) out.push_back(tr->done());

  for (auto& [name, f] : fd_cases()) {
    Tracker tr(name, 1e-4);
    for (std::size_t s = 0; s < opts.fd_seeds; ++s) {
      Rng r = make_rng(opts.seed + s, 21);
      tr.add(f(r));
    }
    out.push_back(tr.done());
  }

  // Forward-mode and reverse-mode derivatives must agree.
  Tracker jvp("jvp_matches_backward", 1e-9);
  for (std::size_t s = 0; s < opts.fd_seeds; ++s) {
    Rng r = make_rng(opts.seed + s, 22);
    nn::HLinear lin(4, 3, r);
    Tensor x = ad::parameter(2, 4, normal_vector(r, 8));
    Tensor dir = ad::constant(2, 4, normal_vector(r, 8));
    Tensor y = ad::sum(lin.forward(ad::lift_rows(x, kK)));
    ad::backward(y);
    double dot = 0.0;
    for (std::size_t i = 0; i < 8; ++i) dot += x.grad()[i] * dir.values()[i];
    const double fwd = ad::jvp(y, x, dir).item();
    jvp.add(std::abs(fwd - dot) / std::max(1.0, std::abs(dot)));
  }
  out.push_back(jvp.done());
  return out;
}

}  // namespace haegan::selftest
