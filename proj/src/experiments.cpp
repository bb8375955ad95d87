#include "haegan/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "haegan/error.hpp"
#include "haegan/layers.hpp"
#include "haegan/optim.hpp"
#include "haegan/selftest.hpp"
#include "haegan/tree_model.hpp"
#include "haegan/weights_io.hpp"
#include "haegan/wgan.hpp"

namespace haegan::experiments {
namespace fs = std::filesystem;
using ad::Tensor;
using config::Config;
using config::Key;
using config::Type;
using lorentz::Curvature;
using lorentz::LorentzPoint;

namespace {

constexpr const char* kOutputVersion = "haegan-output 1";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  Csv(const fs::path& path, const std::string& header) : os_(path) {
    if (!os_) throw io_error("cannot write " + path.string());
    os_ << header << '\n';
  }
  void row(std::initializer_list<std::string> cells) {
    bool first = true;
    for (const auto& c : cells) {
      if (!first) os_ << ',';
      os_ << c;
      first = false;
    }
    os_ << '\n';
  }
  void close() {
    os_.close();
    if (!os_) throw io_error("failed writing csv output");
  }

 private:
  std::ofstream os_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  os << text;
  os.close();
  if (!os) throw io_error("cannot write " + path.string());
}

// Ordered key = value summary.
struct Summary {
  std::vector<std::pair<std::string, std::string>> items;
  void add(const std::string& k, double v) { items.emplace_back(k, fmt(v)); }
  void add(const std::string& k, const std::string& v) { items.emplace_back(k, v); }
  std::string text() const {
    std::string out;
    for (const auto& [k, v] : items) out += k + " = " + v + "\n";
    return out;
  }
};

struct Run {
  const Config& cfg;
  fs::path dir;
  std::ostream* log;
  std::uint64_t seed;

  void say(const std::string& line) const {
    if (log) *log << line << std::endl;
  }
};

// Per-experiment outputs: file names and their columns.
struct Experiment {
  config::Schema keys;
  std::string outputs;
  Status (*body)(Run&);
};

Key seed_key() { return {"seed", Type::UInt, "0", "0", "random seed"}; }

Key gan_key(const std::string& name, Type t, const std::string& v, const std::string& help) {
  return {"gan." + name, t, v, v, help};
}

config::Schema gan_keys(const gan::GanConfig& d) {
  return {
      gan_key("latent_dim", Type::UInt, std::to_string(d.latent_dim), "generator input dimension"),
      gan_key("hidden_dim", Type::UInt, std::to_string(d.hidden_dim), "generator hidden dimension"),
      gan_key("depth_gen", Type::UInt, std::to_string(d.depth_gen), "generator layer count"),
      gan_key("critic_hidden_dim", Type::UInt, std::to_string(d.critic_hidden_dim), "critic hidden dimension"),
      gan_key("depth_critic", Type::UInt, std::to_string(d.depth_critic), "critic layer count"),
      gan_key("lambda_gp", Type::Double, fmt(d.lambda_gp), "gradient penalty weight"),
      gan_key("n_critic", Type::Int, std::to_string(d.n_critic), "critic steps per generator step"),
      gan_key("lr", Type::Double, fmt(d.lr), "learning rate"),
      gan_key("beta1", Type::Double, fmt(d.beta1), "Adam beta1"),
      gan_key("beta2", Type::Double, fmt(d.beta2), "Adam beta2"),
      gan_key("dropout", Type::Double, fmt(d.dropout), "dropout on hyperbolic linear layers"),
      gan_key("batch_size", Type::UInt, std::to_string(d.batch_size), "batch size"),
      gan_key("epochs", Type::Int, std::to_string(d.epochs), "training epochs"),
  };
}

gan::GanConfig read_gan(const Config& c, gan::GanConfig g) {
  g.latent_dim = c.get_uint("gan.latent_dim");
  g.hidden_dim = c.get_uint("gan.hidden_dim");
  g.depth_gen = c.get_uint("gan.depth_gen");
  g.critic_hidden_dim = c.get_uint("gan.critic_hidden_dim");
  g.depth_critic = c.get_uint("gan.depth_critic");
  g.lambda_gp = c.get_double("gan.lambda_gp");
  g.n_critic = static_cast<int>(c.get_int("gan.n_critic"));
  g.lr = c.get_double("gan.lr");
  g.beta1 = c.get_double("gan.beta1");
  g.beta2 = c.get_double("gan.beta2");
  g.dropout = c.get_double("gan.dropout");
  g.batch_size = c.get_uint("gan.batch_size");
  g.epochs = static_cast<int>(c.get_int("gan.epochs"));
  g.curvature = c.get_double("curvature");
  return g;
}

nn::ParamList gan_params(const gan::GanModel& m) {
  nn::ParamList ps;
  m.generator.collect(ps);
  m.critic.collect(ps);
  return ps;
}

// Spatial part of log_o for each row.
std::vector<std::vector<double>> tangent_coords(const Tensor& rows, Curvature k) {
  std::vector<std::vector<double>> out;
  for (const auto& p : nn::rows_to_points(rows, k)) {
    auto v = lorentz::log_map(LorentzPoint::origin(p.dim(), k), p);
    out.emplace_back(v.components().begin() + 1, v.components().end());
  }
  return out;
}

// ---------------------------------------------------------------- selftest

Status run_selftest(Run& r) {
  selftest::Options o;
  o.cases = r.cfg.get_uint("cases");
  o.fd_seeds = r.cfg.get_uint("fd_seeds");
  o.seed = r.seed;
  o.fault = selftest::parse_fault(r.cfg.get_string("inject_fault"));
  auto rows = selftest::run(o);
  Csv csv(r.dir / "selftest.csv", "property,cases,max_error,tolerance,pass");
  bool ok = true;
  char line[160];
  std::snprintf(line, sizeof line, "%-30s %8s %12s %10s  %s", "property", "cases", "max_error", "tolerance", "result");
  r.say(line);
  for (const auto& p : rows) {
    csv.row({p.name, std::to_string(p.cases), fmt(p.max_error), fmt(p.tolerance), p.pass ? "1" : "0"});
    std::snprintf(line, sizeof line, "%-30s %8zu %12.3e %10.1e  %s", p.name.c_str(), p.cases, p.max_error, p.tolerance,
                  p.pass ? "pass" : "FAIL");
    r.say(line);
    ok = ok && p.pass;
  }
  csv.close();
  return ok ? Status::Ok : Status::Failure;
}

// ---------------------------------------------------------------- toy2d

Status run_toy2d(Run& r) {
  const auto& c = r.cfg;
  gan::GanConfig g = read_gan(c, gan::GanConfig{});
  g.output_dim = 2;
  g.seed = r.seed;
  g.validate();
  const Curvature k(g.curvature);
  const auto density = gan::parse_toy_density(c.get_string("density"));
  Rng data_rng = make_rng(r.seed, 10);
  auto data = gan::make_toy_data(density, c.get_uint("train_points"), c.get_uint("heldout_points"), data_rng, k);
  Rng eval_rng = make_rng(r.seed, 11);
  Tensor eval_noise = gan::sample_noise(c.get_uint("eval_points"), g.latent_dim, eval_rng, k);

  Csv hist(r.dir / "history.csv", "epoch,energy_distance");
  std::vector<double> energy;
  gan::TrainCallbacks cb;
  cb.on_epoch_end = [&](int epoch, const gan::GanModel& m) {
    const double e = gan::energy_distance(m.generator.forward(eval_noise), data.heldout, k);
    energy.push_back(e);
    hist.row({std::to_string(epoch), fmt(e)});
    io::save_weights((r.dir / "checkpoint.bin").string(), gan_params(m));
    r.say("epoch " + std::to_string(epoch) + " energy_distance " + fmt(e));
  };
  auto res = gan::train(g, data.train, cb);
  hist.close();

  Csv losses(r.dir / "losses.csv", "step,epoch,critic_loss,generator_loss,gradient_penalty");
  for (const auto& h : res.history)
    losses.row({std::to_string(h.step), std::to_string(h.epoch), fmt(h.critic_loss), fmt(h.generator_loss),
                fmt(h.gradient_penalty)});
  losses.close();

  Csv samples(r.dir / "samples.csv", "x,y");
  for (const auto& v : tangent_coords(res.model.generator.forward(eval_noise), k)) samples.row({fmt(v[0]), fmt(v[1])});
  samples.close();
  Csv held(r.dir / "heldout.csv", "x,y");
  for (const auto& v : tangent_coords(data.heldout, k)) held.row({fmt(v[0]), fmt(v[1])});
  held.close();

  Summary s;
  s.add("energy_first", energy.front());
  s.add("energy_last", energy.back());
  s.add("relative_reduction", 1.0 - energy.back() / energy.front());
  write_text(r.dir / "summary.txt", s.text());
  return Status::Ok;
}

// ---------------------------------------------------------------- concat-grad-surface

Status run_grad_surface(Run& r) {
  const std::size_t m = r.cfg.get_uint("grid_points");
  const double range = r.cfg.get_double("range");
  if (m < 2 || range <= 0.0) throw config_error("grid_points must be >= 2 and range positive");
  const Curvature k(-1.0);
  const std::size_t n = m * m;
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      xs[i * m + j] = -range + 2.0 * range * static_cast<double>(i) / static_cast<double>(m - 1);
      ys[i * m + j] = -range + 2.0 * range * static_cast<double>(j) / static_cast<double>(m - 1);
    }
  const char* comps[3] = {"dzt", "dzs0", "dzs1"};
  Summary s;
  for (bool direct : {true, false}) {
    const std::string method = direct ? "direct" : "tangent";
    double worst = 0.0, origin = 0.0;
    for (std::size_t comp = 0; comp < 3; ++comp) {
      Tensor x = ad::parameter(n, 1, xs);
      Tensor y = ad::constant(n, 1, ys);
      std::vector<Tensor> parts{ad::lift_rows(x, k), ad::lift_rows(y, k)};
      Tensor z = direct ? nn::direct_concat_rows(parts, k) : nn::tangent_concat_rows(parts, k);
      ad::backward(ad::sum(ad::slice_cols(z, comp, 1)));
      auto g = x.grad();
      Csv csv(r.dir / (method + "_" + comps[comp] + ".csv"), "x_s,y_s,value");
      for (std::size_t i = 0; i < n; ++i) {
        csv.row({fmt(xs[i]), fmt(ys[i]), fmt(g[i])});
        worst = std::max(worst, std::abs(g[i]));
        if (comp == 1 && xs[i] == 0.0 && ys[i] == 0.0) origin = g[i];
      }
      csv.close();
    }
    s.add(method + "_max_abs_jacobian", worst);
    s.add(method + "_origin_dzs0", origin);
    r.say(method + " max |dz/dx_s| " + fmt(worst));
  }
  write_text(r.dir / "summary.txt", s.text());
  return Status::Ok;
}

// ---------------------------------------------------------------- concat-depth

struct Block {
  nn::HLinear a, b, out;
};

struct DepthTrace {
  std::vector<std::vector<double>> grad_norm;  // [step][block]
  std::vector<double> loss;
  std::size_t nan_events = 0;
};

double layer_grad_norm(const nn::HLinear& l) {
  nn::ParamList ps;
  l.collect(ps, "l");
  double s = 0.0;
  for (const auto& p : ps)
    for (double g : p.tensor.grad()) s += g * g;
  return std::sqrt(s);
}

DepthTrace depth_run(std::size_t d, std::size_t blocks, std::size_t steps, std::size_t batch, double lr, bool direct,
                     std::uint64_t seed, const Run& r) {
  const Curvature k(-1.0);
  Rng init = make_rng(seed, 30);
  std::vector<Block> net;
  nn::ParamList ps;
  for (std::size_t l = 0; l < blocks; ++l) {
    net.push_back({nn::HLinear(d, d, init), nn::HLinear(d, d, init), nn::HLinear(2 * d, d, init)});
    net.back().a.collect(ps, "block" + std::to_string(l) + ".a");
    net.back().b.collect(ps, "block" + std::to_string(l) + ".b");
    net.back().out.collect(ps, "block" + std::to_string(l) + ".out");
  }
  optim::RiemannianAdam opt(ps, {lr, 0.9, 0.999, 1e-8});
  std::vector<double> ones(d, 1.0);
  nn::WrappedNormal target(lorentz::e2h(ones, k), std::vector<double>(d, 3.0));
  Rng data = make_rng(seed, 31);

  DepthTrace tr;
  for (std::size_t step = 0; step < steps; ++step) {
    Tensor x = nn::wrapped_normal_origin_rows(batch, d, data, k);
    std::vector<LorentzPoint> ys;
    for (std::size_t i = 0; i < batch; ++i) ys.push_back(nn::wrapped_normal_sample(target, data));
    Tensor y = nn::points_to_rows(ys);
    for (const auto& blk : net) {
      std::vector<Tensor> parts{blk.a.forward(x), blk.b.forward(x)};
      x = blk.out.forward(direct ? nn::direct_concat_rows(parts, k) : nn::tangent_concat_rows(parts, k));
    }
    // mean squared geodesic distance to the paired targets
    Tensor loss = ad::mean(ad::square(ad::acosh(ad::neg(ad::lorentz_rows(x, y)))));
    opt.zero_grad();
    ad::backward(loss);
    std::vector<double> norms;
    bool finite = std::isfinite(loss.item());
    for (const auto& blk : net) {
      const double g = (layer_grad_norm(blk.a) + layer_grad_norm(blk.b) + layer_grad_norm(blk.out)) / 3.0;
      finite = finite && std::isfinite(g);
      norms.push_back(g);
    }
    tr.loss.push_back(loss.item());
    tr.grad_norm.push_back(std::move(norms));
    // A non-finite step is recorded and skipped so the trace stays complete.
    if (finite) opt.step();
    else ++tr.nan_events;
    if ((step + 1) % 20 == 0)
      r.say(std::string(direct ? "direct" : "tangent") + " L=" + std::to_string(blocks) + " step " +
            std::to_string(step + 1) + " loss " + fmt(loss.item()));
  }
  return tr;
}

// Mean over the first `blocks` blocks and first `steps` steps, finite entries only.
double early_mean(const DepthTrace& t, std::size_t blocks, std::size_t steps) {
  double s = 0.0;
  std::size_t cnt = 0;
  for (std::size_t i = 0; i < std::min(steps, t.grad_norm.size()); ++i)
    for (std::size_t b = 0; b < std::min(blocks, t.grad_norm[i].size()); ++b)
      if (std::isfinite(t.grad_norm[i][b])) {
        s += t.grad_norm[i][b];
        ++cnt;
      }
  return cnt ? s / static_cast<double>(cnt) : std::nan("");
}

Status run_depth(Run& r) {
  const auto& c = r.cfg;
  const std::size_t d = c.get_uint("dim"), steps = c.get_uint("steps"), batch = c.get_uint("batch_size");
  const double lr = c.get_double("lr");
  auto depths = c.get_uint_list("depths");
  if (d == 0 || steps == 0 || batch == 0 || lr <= 0.0) throw config_error("concat-depth: dim, steps, batch_size and lr must be positive");
  for (auto L : depths)
    if (L == 0) throw config_error("concat-depth: depths must be positive");
  Summary s;
  for (auto L : depths) {
    double means[2] = {0.0, 0.0};
    for (bool direct : {true, false}) {
      const std::string method = direct ? "direct" : "tangent";
      auto tr = depth_run(d, L, steps, batch, lr, direct, r.seed, r);
      const std::string tag = "L" + std::to_string(L) + "_" + method;
      Csv g(r.dir / ("grad_norms_" + tag + ".csv"), "step,block,grad_norm");
      for (std::size_t i = 0; i < tr.grad_norm.size(); ++i)
        for (std::size_t b = 0; b < tr.grad_norm[i].size(); ++b)
          g.row({std::to_string(i + 1), std::to_string(b + 1), fmt(tr.grad_norm[i][b])});
      g.close();
      Csv l(r.dir / ("loss_" + tag + ".csv"), "step,loss");
      for (std::size_t i = 0; i < tr.loss.size(); ++i) l.row({std::to_string(i + 1), fmt(tr.loss[i])});
      l.close();
      means[direct ? 0 : 1] = early_mean(tr, 20, 100);
      s.add(tag + "_mean_grad_norm_blocks1_20", means[direct ? 0 : 1]);
      s.add(tag + "_nan_events", std::to_string(tr.nan_events));
    }
    s.add("L" + std::to_string(L) + "_tangent_over_direct", means[1] / means[0]);
  }
  write_text(r.dir / "summary.txt", s.text());
  return Status::Ok;
}

// ---------------------------------------------------------------- concat-distance

LorentzPoint sample_point(bool wrapped, std::size_t n, Rng& rng, Curvature k) {
  auto v = normal_vector(rng, n);
  return wrapped ? lorentz::e2h(v, k) : LorentzPoint::from_spatial(v, k);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

Status run_distance(Run& r) {
  const auto dims = r.cfg.get_uint_list("dims");
  const std::size_t triples = r.cfg.get_uint("triples");
  if (triples == 0) throw config_error("concat-distance: triples must be positive");
  const Curvature k(-1.0);
  Summary s;
  for (bool wrapped : {false, true}) {
    const std::string scenario = wrapped ? "wrapped_normal" : "spatial_normal";
    for (auto n : dims) {
      if (n == 0) throw config_error("concat-distance: dims must be positive");
      Rng rng = make_rng(r.seed, 40 + 2 * n + (wrapped ? 1 : 0));
      const std::string tag = scenario + "_n" + std::to_string(n);
      Csv csv(r.dir / ("deviations_" + tag + ".csv"), "index,distance,direct_deviation,tangent_deviation");
      std::vector<double> dd, td;
      for (std::size_t i = 0; i < triples; ++i) {
        auto x = sample_point(wrapped, n, rng, k), y = sample_point(wrapped, n, rng, k),
             cc = sample_point(wrapped, n, rng, k);
        const double base = lorentz::distance(x, y);
        std::vector<LorentzPoint> xc{x, cc}, yc{y, cc};
        const double a = std::abs(lorentz::distance(lorentz::direct_concat(xc), lorentz::direct_concat(yc)) - base);
        const double b = std::abs(lorentz::distance(lorentz::tangent_concat(xc), lorentz::tangent_concat(yc)) - base);
        dd.push_back(a);
        td.push_back(b);
        csv.row({std::to_string(i), fmt(base), fmt(a), fmt(b)});
      }
      csv.close();
      s.add(tag + "_median_direct", median(dd));
      s.add(tag + "_median_tangent", median(td));
      r.say(tag + " median direct " + fmt(median(dd)) + " tangent " + fmt(median(td)));
    }
  }
  write_text(r.dir / "summary.txt", s.text());
  return Status::Ok;
}

// ---------------------------------------------------------------- tree-gen

Status run_tree_gen(Run& r) {
  const auto& c = r.cfg;
  treegen::PipelineConfig p;
  p.train_trees = c.get_uint("train_trees");
  p.test_trees = c.get_uint("test_trees");
  p.min_nodes = c.get_uint("min_nodes");
  p.max_nodes = c.get_uint("max_nodes");
  p.samples = c.get_uint("samples");
  p.seed = r.seed;
  p.model.embed_dim = c.get_uint("model.embed_dim");
  p.model.encoder_hidden = c.get_uint("model.encoder_hidden");
  p.model.encoder_depth = c.get_uint("model.encoder_depth");
  p.model.max_nodes = c.get_uint("model.max_nodes");
  p.model.curvature = c.get_double("curvature");
  p.ae.lr = c.get_double("ae.lr");
  p.ae.beta1 = c.get_double("ae.beta1");
  p.ae.beta2 = c.get_double("ae.beta2");
  p.ae.lr_step = c.get_int("ae.lr_step");
  p.ae.lr_gamma = c.get_double("ae.lr_gamma");
  p.ae.batch_size = c.get_uint("ae.batch_size");
  p.ae.epochs = static_cast<int>(c.get_int("ae.epochs"));
  p.gan = read_gan(c, treegen::PipelineConfig::default_gan());
  p.gan.output_dim = p.model.embed_dim;
  p.validate();

  treegen::PipelineCallbacks cb;
  cb.on_ae_epoch = [&](int epoch, const treegen::TreeAutoencoder& ae) {
    nn::ParamList ps;
    ae.collect(ps);
    io::save_weights((r.dir / "autoencoder.bin").string(), ps);
    r.say("autoencoder epoch " + std::to_string(epoch));
  };
  cb.on_gan_epoch = [&](int epoch, const gan::GanModel& m) {
    io::save_weights((r.dir / "gan.bin").string(), gan_params(m));
    r.say("gan epoch " + std::to_string(epoch));
  };
  auto res = treegen::run_pipeline(p, cb);

  tree::save_trees((r.dir / "train_trees.txt").string(), res.train_set);
  tree::save_trees((r.dir / "test_trees.txt").string(), res.test_set);
  tree::save_trees((r.dir / "samples.txt").string(), res.samples);

  Csv ah(r.dir / "ae_history.csv", "step,epoch,loss,accuracy");
  for (const auto& h : res.ae.history)
    ah.row({std::to_string(h.step), std::to_string(h.epoch), fmt(h.loss), fmt(h.accuracy)});
  ah.close();
  Csv gh(r.dir / "gan_history.csv", "step,epoch,critic_loss,generator_loss,gradient_penalty");
  for (const auto& h : res.gan.history)
    gh.row({std::to_string(h.step), std::to_string(h.epoch), fmt(h.critic_loss), fmt(h.generator_loss),
            fmt(h.gradient_penalty)});
  gh.close();

  Csv m(r.dir / "metrics.csv", "comparison,degree_mmd,betweenness_avg_diff,closeness_avg_diff,generated,reference");
  for (const auto& [name, rep] : {std::pair{"generated_vs_test", res.report}, {"test_vs_test", res.reference_report}})
    m.row({name, fmt(rep.degree_mmd), fmt(rep.betweenness_avg_diff), fmt(rep.closeness_avg_diff),
           std::to_string(rep.generated_count), std::to_string(rep.reference_count)});
  m.close();

  std::size_t valid = 0;
  for (const auto& t : res.samples)
    if (t.edge_count() + 1 == t.node_count() && t.node_count() <= p.model.max_nodes) ++valid;
  Summary s;
  s.add("samples", std::to_string(res.samples.size()));
  s.add("valid_samples", std::to_string(valid));
  s.add("truncated_samples", std::to_string(res.truncated));
  s.add("heldout_teacher_forced_accuracy", res.heldout_accuracy);
  s.add("degree_mmd", res.report.degree_mmd);
  s.add("betweenness_avg_diff", res.report.betweenness_avg_diff);
  s.add("closeness_avg_diff", res.report.closeness_avg_diff);
  s.add("reference_degree_mmd", res.reference_report.degree_mmd);
  write_text(r.dir / "summary.txt", s.text());
  r.say("heldout accuracy " + fmt(res.heldout_accuracy) + " degree_mmd " + fmt(res.report.degree_mmd));
  return Status::Ok;
}

// ---------------------------------------------------------------- registry

const std::map<std::string, Experiment>& registry() {
  static const std::map<std::string, Experiment> reg = [] {
    std::map<std::string, Experiment> m;
    m["manifold-selftest"] = {
        {seed_key(),
         {"cases", Type::UInt, "10000", "10000", "randomized cases per geometry property"},
         {"fd_seeds", Type::UInt, "20", "20", "seeds per gradient check"},
         {"inject_fault", Type::String, "none", "none", "none or bad_clamp"}},
        "selftest.csv: property,cases,max_error,tolerance,pass\n",
        run_selftest};

    gan::GanConfig toy;
    config::Schema toy_keys{seed_key(),
                            {"density", Type::String, "checkerboard", "checkerboard", "checkerboard, 8gaussians or 2moons"},
                            {"train_points", Type::UInt, "5000", "5000", "training points"},
                            {"heldout_points", Type::UInt, "2048", "2048", "held-out points"},
                            {"eval_points", Type::UInt, "2048", "2048", "generated points per evaluation"},
                            {"curvature", Type::Double, "-1", "-1", "manifold curvature"}};
    for (auto& k : gan_keys(toy)) toy_keys.push_back(k);
    m["toy2d"] = {toy_keys,
                  "history.csv: epoch,energy_distance\n"
                  "losses.csv: step,epoch,critic_loss,generator_loss,gradient_penalty\n"
                  "samples.csv: x,y\n"
                  "heldout.csv: x,y\n"
                  "checkpoint.bin: weights\n"
                  "summary.txt: energy_first,energy_last,relative_reduction\n",
                  run_toy2d};

    m["concat-grad-surface"] = {
        {seed_key(),
         {"grid_points", Type::UInt, "401", "101", "grid points per axis"},
         {"range", Type::Double, "100", "100", "grid covers [-range, range]"}},
        "{direct,tangent}_{dzt,dzs0,dzs1}.csv: x_s,y_s,value\n"
        "summary.txt: {method}_max_abs_jacobian,{method}_origin_dzs0\n",
        run_grad_surface};

    m["concat-depth"] = {
        {seed_key(),
         {"dim", Type::UInt, "64", "64", "point dimension"},
         {"depths", Type::UIntList, "64,128", "64", "block counts"},
         {"steps", Type::UInt, "200", "100", "training steps"},
         {"batch_size", Type::UInt, "32", "32", "pairs per step"},
         {"lr", Type::Double, "1e-3", "1e-3", "learning rate"}},
        "grad_norms_L{L}_{method}.csv: step,block,grad_norm\n"
        "loss_L{L}_{method}.csv: step,loss\n"
        "summary.txt: L{L}_{method}_mean_grad_norm_blocks1_20,L{L}_{method}_nan_events,L{L}_tangent_over_direct\n",
        run_depth};

    m["concat-distance"] = {
        {seed_key(),
         {"dims", Type::UIntList, "3,16,64", "3,16,64", "point dimensions"},
         {"triples", Type::UInt, "10000", "10000", "samples per scenario and dimension"}},
        "deviations_{scenario}_n{n}.csv: index,distance,direct_deviation,tangent_deviation\n"
        "summary.txt: {scenario}_n{n}_median_direct,{scenario}_n{n}_median_tangent\n",
        run_distance};

    auto tg = treegen::PipelineConfig{};
    config::Schema tree_keys{
        seed_key(),
        {"train_trees", Type::UInt, "400", "100", "training trees"},
        {"test_trees", Type::UInt, "100", "100", "test trees"},
        {"min_nodes", Type::UInt, "20", "20", "smallest tree"},
        {"max_nodes", Type::UInt, "50", "50", "largest tree"},
        {"samples", Type::UInt, "100", "100", "generated trees"},
        {"curvature", Type::Double, "-1", "-1", "manifold curvature"},
        {"model.embed_dim", Type::UInt, "32", "32", "tree embedding dimension"},
        {"model.encoder_hidden", Type::UInt, "32", "32", "encoder hidden dimension"},
        {"model.encoder_depth", Type::UInt, "2", "2", "encoder layers"},
        {"model.max_nodes", Type::UInt, "100", "100", "decoding cap"},
        {"ae.lr", Type::Double, fmt(tg.ae.lr), fmt(tg.ae.lr), "autoencoder learning rate"},
        {"ae.beta1", Type::Double, fmt(tg.ae.beta1), fmt(tg.ae.beta1), "Adam beta1"},
        {"ae.beta2", Type::Double, fmt(tg.ae.beta2), fmt(tg.ae.beta2), "Adam beta2"},
        {"ae.lr_step", Type::Int, "20000", "20000", "StepLR period in steps"},
        {"ae.lr_gamma", Type::Double, "0.5", "0.5", "StepLR factor"},
        {"ae.batch_size", Type::UInt, "32", "32", "autoencoder batch size"},
        {"ae.epochs", Type::Int, "20", "10", "autoencoder epochs"}};
    for (auto k : gan_keys(treegen::PipelineConfig::default_gan())) {
      if (k.name == "gan.epochs") k.ci = "10";
      tree_keys.push_back(k);
    }
    m["tree-gen"] = {tree_keys,
                     "train_trees.txt,test_trees.txt,samples.txt: node_count parent...\n"
                     "ae_history.csv: step,epoch,loss,accuracy\n"
                     "gan_history.csv: step,epoch,critic_loss,generator_loss,gradient_penalty\n"
                     "metrics.csv: comparison,degree_mmd,betweenness_avg_diff,closeness_avg_diff,generated,reference\n"
                     "autoencoder.bin,gan.bin: weights\n"
                     "summary.txt: samples,valid_samples,truncated_samples,heldout_teacher_forced_accuracy,"
                     "degree_mmd,betweenness_avg_diff,closeness_avg_diff,reference_degree_mmd\n",
                     run_tree_gen};
    return m;
  }();
  return reg;
}

const Experiment& lookup(const std::string& name) {
  auto it = registry().find(name);
  if (it == registry().end()) throw config_error("unknown experiment '" + name + "'");
  return it->second;
}

std::string hex16(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

const std::vector<std::string>& names() {
  static const std::vector<std::string> n{"manifold-selftest", "toy2d", "concat-grad-surface",
                                          "concat-depth", "concat-distance", "tree-gen"};
  return n;
}

config::Schema schema(const std::string& name) { return lookup(name).keys; }

Config resolve(const Request& req) {
  Config cfg(lookup(req.name).keys, config::parse_scale(req.scale));
  if (!req.config_path.empty()) cfg.merge_file(req.config_path);
  for (const auto& o : req.overrides) cfg.assign(o);
  if (req.seed) cfg.set("seed", std::to_string(*req.seed));
  return cfg;
}

Outcome run(const Request& req) {
  Outcome out;
  fs::path dir;
  try {
    const Experiment& exp = lookup(req.name);
    Config cfg = resolve(req);
    const std::uint64_t seed = cfg.get_uint("seed");
    dir = fs::path(req.out_root) / (req.name + "-" + hex16(cfg.hash()) + "-s" + std::to_string(seed));
    out.run_dir = dir.string();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create run directory " + dir.string() + ": " + ec.message());
    fs::remove(dir / "DONE", ec);
    fs::remove(dir / "ABORTED", ec);
    write_text(dir / "config.resolved", "# scale = " + config::scale_name(cfg.scale()) + "\n" + cfg.resolved_text());
    write_text(dir / "SCHEMA", std::string(kOutputVersion) + "\n" + exp.outputs);
    Run run{cfg, dir, req.log, seed};
    out.status = exp.body(run);
    if (out.status == Status::Ok) write_text(dir / "DONE", "");
    else out.message = "one or more checks failed";
  } catch (const NumericalAbort& e) {
    out.status = Status::NumericalAbort;
    out.message = e.what();
    if (!dir.empty()) {
      try {
        write_text(dir / "ABORTED", "step = " + std::to_string(e.step()) + "\nreason = " + e.what() + "\n");
      } catch (const Error&) {
      }
    }
  } catch (const Error& e) {
    out.message = e.what();
    switch (e.kind()) {
      case ErrorKind::Numerical: out.status = Status::NumericalAbort; break;
      case ErrorKind::Config:
      case ErrorKind::InvalidArgument:
      case ErrorKind::Io: out.status = Status::ConfigError; break;
      case ErrorKind::Invariant: out.status = Status::Failure; break;
    }
  } catch (const std::exception& e) {
    out.status = Status::Failure;
    out.message = std::string("internal error: ") + e.what();
  }
  return out;
}

}  // namespace haegan::experiments
