#pragma once

// Tree autoencoder (hyperbolic GCN encoder, depth-first autoregressive decoder)
// and the AE + latent WGAN generation pipeline for unlabeled trees.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "haegan/layers.hpp"
#include "haegan/metrics.hpp"
#include "haegan/tree.hpp"
#include "haegan/wgan.hpp"

namespace haegan::treegen {

using ad::Tensor;
using lorentz::Curvature;
using tree::TreeGraph;

struct TreeModelConfig {
  std::size_t embed_dim = 32;
  std::size_t encoder_hidden = 32;
  std::size_t encoder_depth = 2;
  std::size_t max_nodes = 100;
  double curvature = -1.0;

  void validate() const;
};

// Each node's input feature is its degree, lifted with e2h; HGCN layers; then
// the centroid of all node embeddings.
class TreeEncoder {
 public:
  TreeEncoder() = default;
  TreeEncoder(const TreeModelConfig& cfg, Rng& rng);

  Tensor encode(const TreeGraph& t) const;                   // 1 x (d+1)
  Tensor encode_batch(std::span<const TreeGraph> ts) const;  // B x (d+1)
  void collect(nn::ParamList& out, const std::string& prefix = "encoder") const;

  std::vector<nn::HGCN> layers;

 private:
  Curvature k_;
};

struct DecodeStep {
  int node = 0;
  double p_backtrack = 0.0;
  double p_expand = 0.0;
  int truth = -1;  // ground-truth bit under teacher forcing, -1 otherwise
  bool expand = false;
};

struct DecodeTrace {
  std::vector<DecodeStep> steps;
  bool truncated = false;
  // Largest |<h,h>_L - 1/K| over every message and aggregate produced.
  double max_manifold_error = 0.0;
};

struct TeacherForcedResult {
  Tensor loss;  // mean cross-entropy over all decisions of all trees
  std::vector<DecodeTrace> traces;
  std::vector<TreeGraph> trees;  // trees rebuilt from the replayed decisions
  std::size_t correct = 0;
  std::size_t decisions = 0;
  double accuracy() const { return decisions ? static_cast<double>(correct) / static_cast<double>(decisions) : 0.0; }
};

struct DecodeResult {
  TreeGraph tree;
  DecodeTrace trace;
};

class TreeDecoder {
 public:
  TreeDecoder() = default;
  TreeDecoder(const TreeModelConfig& cfg, Rng& rng);

  // z: one row per tree.
  TeacherForcedResult teacher_forced(const Tensor& z, std::span<const TreeGraph> trees) const;
  // Argmax decisions, ties go to backtrack. Stops when the root backtracks; a
  // node that would exceed max_nodes backtracks instead and the trace is flagged.
  std::vector<DecodeResult> decode(const Tensor& z, std::size_t max_nodes) const;
  void collect(nn::ParamList& out, const std::string& prefix = "decoder") const;

  nn::HEmbed embed;
  nn::HLinear message_in, message_out;
  nn::HLinear topo_in, topo_out;
  nn::HCDist topo_head;

 private:
  struct Walk;
  void run(const Tensor& z, std::vector<Walk>& walks, std::vector<Tensor>* logits) const;
  Curvature k_;
};

struct TreeAutoencoder {
  TreeEncoder encoder;
  TreeDecoder decoder;
  void collect(nn::ParamList& out) const;
};

struct AeConfig {
  double lr = 5e-3;
  double beta1 = 0.0;
  double beta2 = 0.999;
  std::int64_t lr_step = 20000;
  double lr_gamma = 0.5;
  std::size_t batch_size = 32;
  int epochs = 20;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AeStepRecord {
  std::int64_t step = 0;
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

struct AeResult {
  TreeAutoencoder model;
  std::vector<AeStepRecord> history;
};

// Teacher-forced training on the topological cross-entropy with Riemannian
// Adam and StepLR. Throws NumericalAbort on a non-finite loss or gradient.
AeResult train_autoencoder(const TreeModelConfig& mcfg, const AeConfig& cfg, const std::vector<TreeGraph>& trees,
                           const std::function<void(int epoch, const TreeAutoencoder&)>& on_epoch_end = {});

// Fraction of correct teacher-forced decisions over all trees.
double teacher_forced_accuracy(const TreeAutoencoder& ae, std::span<const TreeGraph> trees,
                               std::size_t batch_size = 32);

struct SampleResult {
  std::vector<TreeGraph> trees;
  std::size_t truncated = 0;
};
SampleResult sample_trees(const gan::Generator& generator, const TreeDecoder& decoder, std::size_t latent_dim,
                          std::size_t count, std::size_t max_nodes, Rng& rng, Curvature k = Curvature{});

struct PipelineConfig {
  std::size_t train_trees = 400;
  std::size_t test_trees = 100;
  std::size_t min_nodes = 20;
  std::size_t max_nodes = 50;
  std::size_t samples = 100;
  std::uint64_t seed = 0;
  TreeModelConfig model;
  AeConfig ae;
  gan::GanConfig gan = default_gan();

  static gan::GanConfig default_gan();
  void validate() const;
};

struct PipelineResult {
  std::vector<TreeGraph> train_set, test_set;
  AeResult ae;
  gan::TrainResult gan;
  std::vector<TreeGraph> samples;
  std::size_t truncated = 0;
  double heldout_accuracy = 0.0;
  metrics::MetricsReport report;           // samples vs test set
  metrics::MetricsReport reference_report;  // test set vs itself
};

struct PipelineCallbacks {
  std::function<void(int epoch, const TreeAutoencoder&)> on_ae_epoch;
  std::function<void(int epoch, const gan::GanModel&)> on_gan_epoch;
};

PipelineResult run_pipeline(const PipelineConfig& cfg, const PipelineCallbacks& callbacks = {});

// Dataset of n trees with sizes in [min_nodes, max_nodes].
std::vector<TreeGraph> make_tree_dataset(std::size_t n, std::size_t min_nodes, std::size_t max_nodes, Rng& rng);

}  // namespace haegan::treegen
