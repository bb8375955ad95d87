#include <cmath>
#include <numeric>

#include "doctest.h"
#include "haegan/error.hpp"
#include "haegan/optim.hpp"
#include "haegan/tree_model.hpp"

using namespace haegan;
using namespace haegan::treegen;

namespace {

TreeModelConfig small_model(std::size_t d = 8) {
  TreeModelConfig m;
  m.embed_dim = d;
  m.encoder_hidden = d;
  return m;
}

TreeAutoencoder make_ae(const TreeModelConfig& m, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  TreeAutoencoder ae;
  ae.encoder = TreeEncoder(m, rng);
  ae.decoder = TreeDecoder(m, rng);
  return ae;
}

bool same_shape(const TreeGraph& a, const TreeGraph& b) {
  auto x = tree::dfs_decisions(a), y = tree::dfs_decisions(b);
  if (x.size() != y.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i].expand != y[i].expand) return false;
  return true;
}

// Same tree with non-root labels permuted; children order follows labels, so
// the relabeled tree is isomorphic but traversed differently.
TreeGraph relabel(const TreeGraph& t, Rng& rng) {
  const std::size_t n = t.node_count();
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin() + 1, perm.end(), rng);
  std::vector<std::pair<int, int>> e;
  for (auto [a, b] : t.edges()) e.emplace_back(perm[a], perm[b]);
  return TreeGraph::from_edges(n, e);
}

double manifold_error(const Tensor& rows) {
  double worst = 0.0;
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    double ip = -rows.at(r, 0) * rows.at(r, 0);
    for (std::size_t c = 1; c < rows.cols(); ++c) ip += rows.at(r, c) * rows.at(r, c);
    worst = std::max(worst, std::abs(-ip - 1.0));
  }
  return worst;
}

}  // namespace

TEST_CASE("encoder output is on the manifold and invariant to relabeling") {
  auto m = small_model();
  auto ae = make_ae(m, 1);
  Rng rng(2);
  for (int i = 0; i < 30; ++i) {
    auto t = tree::random_tree(rng, 2, 30);
    Tensor z = ae.encoder.encode(t);
    CHECK(z.cols() == m.embed_dim + 1);
    CHECK(manifold_error(z) <= 1e-9);
    Tensor z2 = ae.encoder.encode(relabel(t, rng));
    for (std::size_t c = 0; c < z.cols(); ++c) CHECK(std::abs(z.at(0, c) - z2.at(0, c)) <= 1e-9);
  }
}

TEST_CASE("single-node tree encodes to the self-loop output of its only node") {
  auto m = small_model();
  auto ae = make_ae(m, 3);
  Tensor z = ae.encoder.encode(TreeGraph());
  Tensor h = nn::e2h_rows(ad::constant(1, 1, {0.0}), Curvature{});
  for (const auto& l : ae.encoder.layers) h = l.linear.forward(h);
  for (std::size_t c = 0; c < z.cols(); ++c) CHECK(z.at(0, c) == doctest::Approx(h.at(0, c)).epsilon(1e-12));
}

TEST_CASE("teacher forcing follows the depth-first decisions") {
  auto m = small_model();
  auto ae = make_ae(m, 4);
  Rng rng(5);
  std::vector<TreeGraph> trees;
  for (int i = 0; i < 12; ++i) trees.push_back(tree::random_tree(rng, 1, 25));
  auto tf = ae.decoder.teacher_forced(ae.encoder.encode_batch(trees), trees);
  REQUIRE(tf.traces.size() == trees.size());
  double nll = 0.0;
  std::size_t count = 0;
  for (std::size_t b = 0; b < trees.size(); ++b) {
    const auto& tr = tf.traces[b];
    auto truth = tree::dfs_decisions(trees[b]);
    CHECK(tr.steps.size() == 2 * trees[b].edge_count() + 1);
    CHECK_FALSE(tr.truncated);
    CHECK(tr.max_manifold_error <= 1e-8);
    for (std::size_t s = 0; s < tr.steps.size(); ++s) {
      const auto& st = tr.steps[s];
      CHECK(st.p_expand >= 0.0);
      CHECK(st.p_backtrack >= 0.0);
      CHECK(std::abs(st.p_expand + st.p_backtrack - 1.0) <= 1e-9);
      CHECK(st.truth == (truth[s].expand ? 1 : 0));
      nll -= std::log(st.truth == 1 ? st.p_expand : st.p_backtrack);
      ++count;
    }
    CHECK(same_shape(tf.trees[b], trees[b]));
  }
  CHECK(tf.decisions == count);
  CHECK(std::abs(tf.loss.item() - nll / static_cast<double>(count)) <= 1e-9);
}

TEST_CASE("batched teacher forcing matches one tree at a time") {
  auto m = small_model();
  auto ae = make_ae(m, 6);
  Rng rng(7);
  std::vector<TreeGraph> trees;
  for (int i = 0; i < 6; ++i) trees.push_back(tree::random_tree(rng, 1, 15));
  auto all = ae.decoder.teacher_forced(ae.encoder.encode_batch(trees), trees);
  for (std::size_t b = 0; b < trees.size(); ++b) {
    std::span<const TreeGraph> one(&trees[b], 1);
    auto single = ae.decoder.teacher_forced(ae.encoder.encode_batch(one), one);
    REQUIRE(single.traces[0].steps.size() == all.traces[b].steps.size());
    for (std::size_t s = 0; s < single.traces[0].steps.size(); ++s)
      CHECK(std::abs(single.traces[0].steps[s].p_expand - all.traces[b].steps[s].p_expand) <= 1e-12);
  }
}

TEST_CASE("teacher-forced loss gradients match finite differences") {
  auto m = small_model(3);
  auto ae = make_ae(m, 8);
  Rng rng(9);
  std::vector<TreeGraph> trees{tree::random_tree(rng, 6, 6), tree::random_tree(rng, 4, 4)};
  nn::ParamList ps;
  ae.collect(ps);
  std::vector<Tensor> in;
  for (auto& p : ps)
    if (!p.manifold) in.push_back(p.tensor);
  auto f = [&](std::span<const Tensor>) {
    return ae.decoder.teacher_forced(ae.encoder.encode_batch(trees), trees).loss;
  };
  CHECK(ad::fd_check(f, in).max_rel_error <= 1e-4);
}

TEST_CASE("free decoding always yields a valid tree within the cap") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto m = small_model();
    auto ae = make_ae(m, seed);
    Rng rng(seed + 100);
    Tensor z = nn::wrapped_normal_origin_rows(4, m.embed_dim, rng);
    for (std::size_t cap : {1u, 3u, 100u}) {
      for (const auto& r : ae.decoder.decode(z, cap)) {
        CHECK(r.tree.node_count() >= 1);
        CHECK(r.tree.node_count() <= cap);
        CHECK(r.tree.edges().size() == r.tree.node_count() - 1);
        // a vetoed expansion is recorded as a backtrack, so the length identity still holds
        CHECK(r.trace.steps.size() == 2 * r.tree.edge_count() + 1);
        CHECK(r.trace.max_manifold_error <= 1e-8);
      }
    }
  }
}

TEST_CASE("a decoder that always expands is truncated at the cap") {
  auto m = small_model();
  auto ae = make_ae(m, 11);
  // Expand logit = distance to the second centroid; move it far away.
  auto c = ae.decoder.topo_head.centroids.mutable_values();
  const std::size_t d1 = m.embed_dim + 1;
  std::vector<double> s(m.embed_dim, 0.0);
  s[0] = 40.0;
  auto far = lorentz::LorentzPoint::from_spatial(s, Curvature{});
  for (std::size_t j = 0; j < d1; ++j) {
    c[j] = j == 0 ? 1.0 : 0.0;
    c[d1 + j] = far.coords()[j];
  }
  Rng rng(12);
  auto out = ae.decoder.decode(nn::wrapped_normal_origin_rows(3, m.embed_dim, rng), 7);
  for (const auto& r : out) {
    CHECK(r.tree.node_count() == 7);
    CHECK(r.trace.truncated);
    // a path: every expansion happens at the newest node
    CHECK(r.tree.parents() == std::vector<int>{-1, 0, 1, 2, 3, 4, 5});
  }
}

TEST_CASE("a single repeated tree is reconstructed exactly after training") {
  auto m = small_model(16);
  Rng rng(13);
  auto t = tree::random_tree(rng, 8, 8);
  std::vector<TreeGraph> data(16, t);
  auto ae = make_ae(m, 14);
  nn::ParamList ps;
  ae.collect(ps);
  optim::RiemannianAdam opt(ps, {5e-3, 0.9, 0.999, 1e-8});
  bool exact = false;
  for (int step = 0; step < 600 && !exact; ++step) {
    opt.zero_grad();
    ad::backward(ae.decoder.teacher_forced(ae.encoder.encode_batch(data), data).loss);
    opt.step();
    if (step % 20 == 19) exact = same_shape(ae.decoder.decode(ae.encoder.encode(t), 100)[0].tree, t);
  }
  CHECK(exact);
}

TEST_CASE("autoencoder training reduces the loss") {
  Rng rng = make_rng(0, 10);
  auto trees = make_tree_dataset(400, 20, 50, rng);
  AeConfig cfg;
  cfg.epochs = 5;
  auto res = train_autoencoder(TreeModelConfig{}, cfg, trees);
  const std::size_t per_epoch = (400 + 31) / 32;
  REQUIRE(res.history.size() == 5 * per_epoch);
  double first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < per_epoch; ++i) {
    first += res.history[i].loss;
    last += res.history[res.history.size() - per_epoch + i].loss;
  }
  CHECK(last < first);
  for (const auto& h : res.history) CHECK(std::isfinite(h.loss));
}

TEST_CASE("pipeline smoke run is finite and reproducible") {
  PipelineConfig cfg;
  cfg.train_trees = 50;
  cfg.test_trees = 20;
  cfg.samples = 10;
  cfg.ae.epochs = 2;
  cfg.gan.epochs = 2;
  cfg.seed = 3;
  auto a = run_pipeline(cfg);
  CHECK(a.samples.size() == 10);
  for (const auto& t : a.samples) CHECK(t.node_count() <= cfg.model.max_nodes);
  CHECK(std::isfinite(a.report.degree_mmd));
  CHECK(std::isfinite(a.report.betweenness_avg_diff));
  CHECK(std::isfinite(a.report.closeness_avg_diff));
  CHECK(std::abs(a.reference_report.degree_mmd) <= 1e-12);
  for (const auto& h : a.ae.history) CHECK(std::isfinite(h.loss));
  for (const auto& h : a.gan.history) {
    CHECK(std::isfinite(h.critic_loss));
    CHECK(std::isfinite(h.generator_loss));
  }
  auto b = run_pipeline(cfg);
  CHECK(a.report.degree_mmd == b.report.degree_mmd);
  CHECK(a.report.closeness_avg_diff == b.report.closeness_avg_diff);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i] == b.samples[i]);
}

TEST_CASE("configuration errors") {
  PipelineConfig cfg;
  cfg.gan.output_dim = 16;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = PipelineConfig{};
  cfg.model.max_nodes = 10;
  CHECK_THROWS_AS(cfg.validate(), Error);
  AeConfig ae;
  ae.lr = 0.0;
  CHECK_THROWS_AS(ae.validate(), Error);
}
