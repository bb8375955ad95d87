#include "haegan/tree_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "haegan/error.hpp"
#include "haegan/optim.hpp"

namespace haegan::treegen {

using namespace ad;

namespace {

double max_row_manifold_error(const Tensor& rows, Curvature k) {
  const std::size_t c = rows.cols();
  auto v = rows.values();
  double worst = 0.0;
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    auto x = v.subspan(r * c, c);
    worst = std::max(worst, std::abs(k.value() * lorentz::lorentz_inner(x, x) - 1.0));
  }
  return worst;
}

// Raw degrees put e2h outputs so far out that cosh and sinh coincide and
// every degree above 2 points the same way.
constexpr double kDegreeScale = 0.25;

Tensor origin_row(std::size_t cols, Curvature k) {
  std::vector<double> o(cols, 0.0);
  o[0] = 1.0 / k.sqrt_neg();
  return constant(1, cols, std::move(o));
}

void require_finite(double v, const char* what, std::int64_t step) {
  if (!std::isfinite(v)) throw NumericalAbort(std::string(what) + " is not finite", step);
}

}  // namespace

void TreeModelConfig::validate() const {
  if (embed_dim == 0 || encoder_hidden == 0) throw config_error("tree model dimensions must be positive");
  if (encoder_depth == 0) throw config_error("tree encoder needs at least one layer");
  if (max_nodes < 1) throw config_error("max_nodes must be at least 1");
  if (!(curvature < 0.0)) throw config_error("curvature must be negative");
}

TreeEncoder::TreeEncoder(const TreeModelConfig& cfg, Rng& rng) : k_(cfg.curvature) {
  nn::HLinearOptions o;
  o.k = k_;
  std::size_t in = 1;
  for (std::size_t l = 0; l < cfg.encoder_depth; ++l) {
    std::size_t out = l + 1 == cfg.encoder_depth ? cfg.embed_dim : cfg.encoder_hidden;
    layers.emplace_back(in, out, rng, o);
    in = out;
  }
}

Tensor TreeEncoder::encode(const TreeGraph& t) const {
  const std::size_t n = t.node_count();
  std::vector<double> feat(n), adj(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    feat[i] = kDegreeScale * static_cast<double>(t.degree(i));
    adj[i * n + i] = 1.0;
  }
  for (auto [a, b] : t.edges()) {
    adj[a * n + b] = 1.0;
    adj[b * n + a] = 1.0;
  }
  Tensor a = constant(n, n, std::move(adj));
  Tensor h = nn::e2h_rows(constant(n, 1, std::move(feat)), k_);
  for (const auto& layer : layers) h = layer.forward(h, a);
  return nn::centroid_rows(h, full(1, n, 1.0), k_);
}

Tensor TreeEncoder::encode_batch(std::span<const TreeGraph> ts) const {
  std::vector<Tensor> rows;
  rows.reserve(ts.size());
  for (const auto& t : ts) rows.push_back(encode(t));
  return concat_rows(rows);
}

void TreeEncoder::collect(nn::ParamList& out, const std::string& prefix) const {
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i].collect(out, prefix + ".gcn" + std::to_string(i));
}

// Per-tree traversal state. Each node keeps the HLinear-transformed message it
// received from its parent and the running sum of transformed messages from
// its children, so the centroid of any inward set is one normalization away.
struct TreeDecoder::Walk {
  const std::vector<tree::Decision>* truth = nullptr;
  std::size_t max_nodes = std::numeric_limits<std::size_t>::max();
  std::size_t t = 0;
  std::vector<int> parent{-1};
  std::vector<int> stack{0};
  std::vector<Tensor> up_topo, up_msg, down_topo, down_msg;
  DecodeTrace trace;
  bool done = false;
};

TreeDecoder::TreeDecoder(const TreeModelConfig& cfg, Rng& rng) : k_(cfg.curvature) {
  nn::HLinearOptions o;
  o.k = k_;
  const std::size_t d = cfg.embed_dim;
  embed = nn::HEmbed(1, d, rng, k_);
  message_in = nn::HLinear(d, d, rng, o);
  message_out = nn::HLinear(2 * d, d, rng, o);
  topo_in = nn::HLinear(d, d, rng, o);
  topo_out = nn::HLinear(2 * d, d, rng, o);
  topo_head = nn::HCDist(d, 2, rng, k_);
}

void TreeDecoder::collect(nn::ParamList& out, const std::string& prefix) const {
  embed.collect(out, prefix + ".embed");
  message_in.collect(out, prefix + ".message_in");
  message_out.collect(out, prefix + ".message_out");
  topo_in.collect(out, prefix + ".topo_in");
  topo_out.collect(out, prefix + ".topo_out");
  topo_head.collect(out, prefix + ".topo_head");
}

void TreeDecoder::run(const Tensor& z, std::vector<Walk>& walks, std::vector<Tensor>* logits) const {
  if (z.rows() != walks.size()) throw invalid_argument("decoder: one embedding row per tree is required");
  if (z.cols() != topo_out.out_dim() + 1) throw invalid_argument("decoder: embedding dimension mismatch");
  const Tensor o = origin_row(z.cols(), k_);
  // The root's parent is a dummy whose message is the origin.
  const Tensor o_topo = topo_in.forward(o), o_msg = message_in.forward(o);
  const Tensor z_cur = embed.forward(constant(1, 1, {1.0}));
  for (auto& w : walks) {
    w.up_topo = {o_topo};
    w.up_msg = {o_msg};
    w.down_topo = {Tensor()};
    w.down_msg = {Tensor()};
  }

  while (true) {
    std::vector<std::size_t> active;
    for (std::size_t b = 0; b < walks.size(); ++b)
      if (!walks[b].done) active.push_back(b);
    if (active.empty()) break;

    std::vector<Tensor> sums;
    for (auto b : active) {
      auto& w = walks[b];
      const int i = w.stack.back();
      sums.push_back(w.down_topo[i].defined() ? add(w.up_topo[i], w.down_topo[i]) : w.up_topo[i]);
    }
    Tensor z_nei = nn::normalize_rows(concat_rows(sums), k_);
    std::vector<Tensor> cat_parts{z_nei, gather_rows(z, active)};
    Tensor lg = topo_head.forward(topo_out.forward(nn::direct_concat_rows(cat_parts, k_)));
    if (logits) logits->push_back(lg);
    const double nei_err = max_row_manifold_error(z_nei, k_);

    // Decide, then gather the messages each walk needs.
    std::vector<char> expand(active.size());
    std::vector<std::size_t> senders;
    std::vector<Tensor> msg_sums;
    for (std::size_t g = 0; g < active.size(); ++g) {
      auto& w = walks[active[g]];
      w.trace.max_manifold_error = std::max(w.trace.max_manifold_error, nei_err);
      const int i = w.stack.back();
      const double l0 = lg.at(g, 0), l1 = lg.at(g, 1), m = std::max(l0, l1);
      const double e0 = std::exp(l0 - m), e1 = std::exp(l1 - m);
      DecodeStep st;
      st.node = i;
      st.p_backtrack = e0 / (e0 + e1);
      st.p_expand = e1 / (e0 + e1);
      bool want;
      if (w.truth) {
        if (w.t >= w.truth->size()) throw invalid_argument("decoder: decision sequence ended early");
        want = (*w.truth)[w.t].expand;
        st.truth = want ? 1 : 0;
      } else {
        want = st.p_expand > st.p_backtrack;
      }
      if (want && w.parent.size() >= w.max_nodes) {
        want = false;
        w.trace.truncated = true;
      }
      st.expand = want;
      w.trace.steps.push_back(st);
      expand[g] = want;
      if (want) {
        senders.push_back(g);
        msg_sums.push_back(w.down_msg[i].defined() ? add(w.up_msg[i], w.down_msg[i]) : w.up_msg[i]);
      } else if (w.stack.size() > 1) {
        // Message to the parent aggregates the children only; a leaf sends from the origin.
        senders.push_back(g);
        msg_sums.push_back(w.down_msg[i].defined() ? w.down_msg[i] : o);
      }
    }

    Tensor ht, hm;
    if (!senders.empty()) {
      Tensor agg = nn::normalize_rows(concat_rows(msg_sums), k_);
      std::vector<std::size_t> zero(senders.size(), 0);
      std::vector<Tensor> parts{gather_rows(z_cur, zero), agg};
      Tensor h = message_out.forward(nn::direct_concat_rows(parts, k_));
      const double err = std::max(max_row_manifold_error(agg, k_), max_row_manifold_error(h, k_));
      for (auto g : senders) {
        auto& tr = walks[active[g]].trace;
        tr.max_manifold_error = std::max(tr.max_manifold_error, err);
      }
      ht = topo_in.forward(h);
      hm = message_in.forward(h);
    }

    std::size_t s = 0;
    for (std::size_t g = 0; g < active.size(); ++g) {
      auto& w = walks[active[g]];
      const int i = w.stack.back();
      ++w.t;
      if (expand[g]) {
        const int j = static_cast<int>(w.parent.size());
        w.parent.push_back(i);
        w.up_topo.push_back(slice_rows(ht, s, 1));
        w.up_msg.push_back(slice_rows(hm, s, 1));
        w.down_topo.emplace_back();
        w.down_msg.emplace_back();
        w.stack.push_back(j);
        ++s;
      } else if (w.stack.size() > 1) {
        const int p = w.parent[i];
        Tensor rt = slice_rows(ht, s, 1), rm = slice_rows(hm, s, 1);
        w.down_topo[p] = w.down_topo[p].defined() ? add(w.down_topo[p], rt) : rt;
        w.down_msg[p] = w.down_msg[p].defined() ? add(w.down_msg[p], rm) : rm;
        w.stack.pop_back();
        ++s;
      } else {
        w.stack.pop_back();
        w.done = true;
      }
    }
  }
}

TeacherForcedResult TreeDecoder::teacher_forced(const Tensor& z, std::span<const TreeGraph> trees) const {
  std::vector<std::vector<tree::Decision>> truth;
  truth.reserve(trees.size());
  for (const auto& t : trees) truth.push_back(tree::dfs_decisions(t));
  std::vector<Walk> walks(trees.size());
  for (std::size_t b = 0; b < trees.size(); ++b) walks[b].truth = &truth[b];
  std::vector<Tensor> logits;
  run(z, walks, &logits);

  TeacherForcedResult res;
  // Logits are grouped by step; labels follow the same order.
  std::vector<std::size_t> labels;
  for (std::size_t step = 0;; ++step) {
    bool any = false;
    for (const auto& w : walks) {
      if (step >= w.trace.steps.size()) continue;
      any = true;
      const auto& st = w.trace.steps[step];
      labels.push_back(static_cast<std::size_t>(st.truth));
      const bool predicted = st.p_expand > st.p_backtrack;
      res.correct += predicted == (st.truth == 1);
    }
    if (!any) break;
  }
  res.decisions = labels.size();
  res.loss = cross_entropy(concat_rows(logits), labels);
  for (auto& w : walks) {
    res.trees.emplace_back(w.parent);
    res.traces.push_back(std::move(w.trace));
  }
  return res;
}

std::vector<DecodeResult> TreeDecoder::decode(const Tensor& z, std::size_t max_nodes) const {
  if (max_nodes < 1) throw invalid_argument("decode: max_nodes must be at least 1");
  std::vector<Walk> walks(z.rows());
  for (auto& w : walks) w.max_nodes = max_nodes;
  run(z, walks, nullptr);
  std::vector<DecodeResult> out;
  for (auto& w : walks) out.push_back({TreeGraph(w.parent), std::move(w.trace)});
  return out;
}

void TreeAutoencoder::collect(nn::ParamList& out) const {
  encoder.collect(out);
  decoder.collect(out);
}

void AeConfig::validate() const {
  if (!(lr > 0.0)) throw config_error("ae lr must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) throw config_error("ae betas must be in [0, 1)");
  if (lr_step < 1) throw config_error("ae lr_step must be positive");
  if (!(lr_gamma > 0.0)) throw config_error("ae lr_gamma must be positive");
  if (batch_size == 0) throw config_error("ae batch_size must be positive");
  if (epochs < 0) throw config_error("ae epochs must be non-negative");
}

AeResult train_autoencoder(const TreeModelConfig& mcfg, const AeConfig& cfg, const std::vector<TreeGraph>& trees,
                           const std::function<void(int, const TreeAutoencoder&)>& on_epoch_end) {
  mcfg.validate();
  cfg.validate();
  if (trees.empty()) throw invalid_argument("autoencoder training needs at least one tree");
  Rng init_rng = make_rng(cfg.seed, 0);
  Rng batch_rng = make_rng(cfg.seed, 1);
  AeResult res;
  res.model.encoder = TreeEncoder(mcfg, init_rng);
  res.model.decoder = TreeDecoder(mcfg, init_rng);
  nn::ParamList ps;
  res.model.collect(ps);
  optim::RiemannianAdam opt(ps, {cfg.lr, cfg.beta1, cfg.beta2, 1e-8});
  optim::StepLR sched(opt, cfg.lr_step, cfg.lr_gamma);

  std::vector<std::size_t> order(trees.size());
  std::iota(order.begin(), order.end(), 0);
  std::int64_t step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), batch_rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++step) {
      std::vector<TreeGraph> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i)
        batch.push_back(trees[order[i]]);
      try {
        opt.zero_grad();
        auto tf = res.model.decoder.teacher_forced(res.model.encoder.encode_batch(batch), batch);
        require_finite(tf.loss.item(), "autoencoder loss", step);
        backward(tf.loss);
        opt.step();
        sched.step();
        res.history.push_back({step, epoch, tf.loss.item(), tf.accuracy()});
      } catch (const NumericalAbort&) {
        throw;
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::Numerical) throw NumericalAbort(e.what(), step);
        throw;
      }
    }
    if (on_epoch_end) on_epoch_end(epoch, res.model);
  }
  return res;
}

double teacher_forced_accuracy(const TreeAutoencoder& ae, std::span<const TreeGraph> trees, std::size_t batch_size) {
  if (batch_size == 0) throw invalid_argument("batch_size must be positive");
  std::size_t correct = 0, total = 0;
  for (std::size_t start = 0; start < trees.size(); start += batch_size) {
    auto batch = trees.subspan(start, std::min(batch_size, trees.size() - start));
    auto tf = ae.decoder.teacher_forced(ae.encoder.encode_batch(batch), batch);
    correct += tf.correct;
    total += tf.decisions;
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

SampleResult sample_trees(const gan::Generator& generator, const TreeDecoder& decoder, std::size_t latent_dim,
                          std::size_t count, std::size_t max_nodes, Rng& rng, Curvature k) {
  SampleResult out;
  if (count == 0) return out;
  Tensor z = detach(generator.forward(gan::sample_noise(count, latent_dim, rng, k)));
  for (auto& r : decoder.decode(z, max_nodes)) {
    out.truncated += r.trace.truncated;
    out.trees.push_back(std::move(r.tree));
  }
  return out;
}

gan::GanConfig PipelineConfig::default_gan() {
  gan::GanConfig g;
  g.latent_dim = 16;
  g.hidden_dim = 32;
  g.depth_gen = 2;
  g.output_dim = 32;
  g.critic_hidden_dim = 32;
  g.depth_critic = 2;
  g.dropout = 0.1;
  g.lr = 1e-4;
  g.beta1 = 0.0;
  g.beta2 = 0.9;
  g.lambda_gp = 10.0;
  g.batch_size = 64;
  g.epochs = 20;
  return g;
}

void PipelineConfig::validate() const {
  if (train_trees == 0 || test_trees == 0) throw config_error("tree pipeline needs non-empty train and test sets");
  if (min_nodes < 1 || max_nodes < min_nodes) throw config_error("need 1 <= min_nodes <= max_nodes");
  if (model.max_nodes < max_nodes) throw config_error("decoder max_nodes must cover the dataset size range");
  if (gan.output_dim != model.embed_dim) throw config_error("gan output_dim must equal the tree embedding dimension");
  if (gan.curvature != model.curvature) throw config_error("gan and tree model curvatures differ");
  model.validate();
  ae.validate();
  gan.validate();
}

std::vector<TreeGraph> make_tree_dataset(std::size_t n, std::size_t min_nodes, std::size_t max_nodes, Rng& rng) {
  std::vector<TreeGraph> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(tree::random_tree(rng, min_nodes, max_nodes));
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const PipelineCallbacks& callbacks) {
  cfg.validate();
  PipelineResult res;
  Rng data_rng = make_rng(cfg.seed, 10);
  auto all = make_tree_dataset(cfg.train_trees + cfg.test_trees, cfg.min_nodes, cfg.max_nodes, data_rng);
  res.train_set.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(cfg.train_trees));
  res.test_set.assign(all.begin() + static_cast<std::ptrdiff_t>(cfg.train_trees), all.end());

  AeConfig ae_cfg = cfg.ae;
  ae_cfg.seed = cfg.seed;
  res.ae = train_autoencoder(cfg.model, ae_cfg, res.train_set, callbacks.on_ae_epoch);
  res.heldout_accuracy = teacher_forced_accuracy(res.ae.model, res.test_set);

  Tensor embeddings = detach(res.ae.model.encoder.encode_batch(res.train_set));
  gan::GanConfig gan_cfg = cfg.gan;
  gan_cfg.seed = cfg.seed;
  gan::TrainCallbacks gcb;
  gcb.on_epoch_end = callbacks.on_gan_epoch;
  res.gan = gan::train(gan_cfg, embeddings, gcb);

  Rng sample_rng = make_rng(cfg.seed, 11);
  auto s = sample_trees(res.gan.model.generator, res.ae.model.decoder, gan_cfg.latent_dim, cfg.samples,
                        cfg.model.max_nodes, sample_rng, Curvature(cfg.model.curvature));
  res.samples = std::move(s.trees);
  res.truncated = s.truncated;
  res.report = metrics::evaluate(res.samples, res.test_set);
  res.reference_report = metrics::evaluate(res.test_set, res.test_set);
  return res;
}

}  // namespace haegan::treegen
