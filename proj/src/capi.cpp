#include "haegan/haegan.h"

#include <cstring>
#include <memory>
#include <iostream>
#include <string>
#include <vector>

#include "haegan/error.hpp"
#include "haegan/experiments.hpp"
#include "haegan/lorentz.hpp"
#include "haegan/metrics.hpp"
#include "haegan/tree.hpp"

using namespace haegan;

struct hg_tree_set {
  std::vector<tree::TreeGraph> trees;
};

struct hg_run_config {
  experiments::Request req;
};

namespace {

thread_local std::string g_last_error;

hg_status fail(hg_status s, const std::string& what) {
  g_last_error = what;
  return s;
}

template <class F>
hg_status guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrorKind::InvalidArgument: return fail(HG_INVALID_ARGUMENT, e.what());
      case ErrorKind::Config: return fail(HG_CONFIG_ERROR, e.what());
      case ErrorKind::Numerical: return fail(HG_NUMERICAL_ABORT, e.what());
      case ErrorKind::Invariant: return fail(HG_TEST_FAILURE, e.what());
      case ErrorKind::Io: return fail(HG_IO_ERROR, e.what());
    }
    return fail(HG_INTERNAL_ERROR, e.what());
  } catch (const std::exception& e) {
    return fail(HG_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(HG_INTERNAL_ERROR, "unknown exception");
  }
}

// Caller-supplied coordinates that fail validation are argument errors.
template <class F>
auto validated(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Invariant) throw invalid_argument(e.what());
    throw;
  }
}

lorentz::LorentzPoint point(const double* x, std::size_t n, double k) {
  if (!x) throw invalid_argument("null point");
  return validated([&] { return lorentz::LorentzPoint::from_coords({x, x + n + 1}, lorentz::Curvature(k)); });
}

void copy_out(std::span<const double> src, double* out) {
  if (!out) throw invalid_argument("null output");
  std::memcpy(out, src.data(), src.size() * sizeof(double));
}

hg_status concat(bool direct, const double* x, size_t n1, const double* y, size_t n2, double k, double* out) {
  return guarded([&] {
    std::vector<lorentz::LorentzPoint> parts{point(x, n1, k), point(y, n2, k)};
    copy_out((direct ? lorentz::direct_concat(parts) : lorentz::tangent_concat(parts)).coords(), out);
    return HG_OK;
  });
}

}  // namespace

extern "C" {

const char* hg_last_error(void) { return g_last_error.c_str(); }
const char* hg_version(void) { return "1.0.0"; }

hg_status hg_distance(const double* x, const double* y, size_t n, double k, double* out) {
  return guarded([&] {
    if (!out) throw invalid_argument("null output");
    *out = lorentz::distance(point(x, n, k), point(y, n, k));
    return HG_OK;
  });
}

hg_status hg_exp_map(const double* x, const double* v, size_t n, double k, double* out) {
  return guarded([&] {
    auto p = point(x, n, k);
    if (!v) throw invalid_argument("null tangent vector");
    auto t = validated([&] { return lorentz::TangentVector(p, {v, v + n + 1}); });
    copy_out(lorentz::exp_map(p, t).coords(), out);
    return HG_OK;
  });
}

hg_status hg_log_map(const double* x, const double* y, size_t n, double k, double* out) {
  return guarded([&] {
    copy_out(lorentz::log_map(point(x, n, k), point(y, n, k)).components(), out);
    return HG_OK;
  });
}

hg_status hg_e2h(const double* t, size_t n, double k, double* out) {
  return guarded([&] {
    if (!t) throw invalid_argument("null input");
    copy_out(lorentz::e2h({t, t + n}, lorentz::Curvature(k)).coords(), out);
    return HG_OK;
  });
}

hg_status hg_direct_concat(const double* x, size_t n1, const double* y, size_t n2, double k, double* out) {
  return concat(true, x, n1, y, n2, k, out);
}

hg_status hg_tangent_concat(const double* x, size_t n1, const double* y, size_t n2, double k, double* out) {
  return concat(false, x, n1, y, n2, k, out);
}

hg_status hg_tree_set_random(uint64_t seed, size_t count, size_t min_nodes, size_t max_nodes, hg_tree_set** out) {
  return guarded([&] {
    if (!out) throw invalid_argument("null output");
    auto set = std::make_unique<hg_tree_set>();
    Rng rng = make_rng(seed, 10);
    for (size_t i = 0; i < count; ++i) set->trees.push_back(tree::random_tree(rng, min_nodes, max_nodes));
    *out = set.release();
    return HG_OK;
  });
}

hg_status hg_tree_set_load(const char* path, hg_tree_set** out) {
  return guarded([&] {
    if (!path || !out) throw invalid_argument("null argument");
    auto set = std::make_unique<hg_tree_set>();
    set->trees = tree::load_trees(path);
    *out = set.release();
    return HG_OK;
  });
}

hg_status hg_tree_set_save(const hg_tree_set* set, const char* path) {
  return guarded([&] {
    if (!set || !path) throw invalid_argument("null argument");
    tree::save_trees(path, set->trees);
    return HG_OK;
  });
}

size_t hg_tree_set_size(const hg_tree_set* set) { return set ? set->trees.size() : 0; }

hg_status hg_tree_set_parents(const hg_tree_set* set, size_t index, int* parents, size_t capacity,
                              size_t* node_count) {
  return guarded([&] {
    if (!set || !node_count) throw invalid_argument("null argument");
    if (index >= set->trees.size()) throw invalid_argument("tree index out of range");
    const auto& p = set->trees[index].parents();
    *node_count = p.size();
    if (capacity < p.size() || !parents) throw invalid_argument("parent buffer too small");
    std::memcpy(parents, p.data(), p.size() * sizeof(int));
    return HG_OK;
  });
}

hg_status hg_tree_metrics(const hg_tree_set* generated, const hg_tree_set* reference, double sigma, double out[3]) {
  return guarded([&] {
    if (!generated || !reference || !out) throw invalid_argument("null argument");
    auto r = metrics::evaluate(generated->trees, reference->trees, sigma);
    out[0] = r.degree_mmd;
    out[1] = r.betweenness_avg_diff;
    out[2] = r.closeness_avg_diff;
    return HG_OK;
  });
}

void hg_tree_set_free(hg_tree_set* set) { delete set; }

size_t hg_experiment_count(void) { return experiments::names().size(); }

const char* hg_experiment_name(size_t index) {
  const auto& n = experiments::names();
  return index < n.size() ? n[index].c_str() : nullptr;
}

hg_status hg_run_config_new(const char* experiment, const char* scale, hg_run_config** out) {
  return guarded([&] {
    if (!experiment || !out) throw invalid_argument("null argument");
    auto cfg = std::make_unique<hg_run_config>();
    cfg->req.name = experiment;
    if (scale) cfg->req.scale = scale;
    experiments::resolve(cfg->req);
    *out = cfg.release();
    return HG_OK;
  });
}

hg_status hg_run_config_load_file(hg_run_config* cfg, const char* path) {
  return guarded([&] {
    if (!cfg || !path) throw invalid_argument("null argument");
    auto req = cfg->req;
    req.config_path = path;
    experiments::resolve(req);
    cfg->req = std::move(req);
    return HG_OK;
  });
}

hg_status hg_run_config_set(hg_run_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    if (!cfg || !key || !value) throw invalid_argument("null argument");
    auto req = cfg->req;
    req.overrides.push_back(std::string(key) + "=" + value);
    experiments::resolve(req);
    cfg->req = std::move(req);
    return HG_OK;
  });
}

hg_status hg_run_config_set_seed(hg_run_config* cfg, uint64_t seed) {
  return guarded([&] {
    if (!cfg) throw invalid_argument("null argument");
    cfg->req.seed = seed;
    return HG_OK;
  });
}

hg_status hg_run_config_resolved(const hg_run_config* cfg, char* buf, size_t capacity, size_t* needed) {
  return guarded([&] {
    if (!cfg || !needed) throw invalid_argument("null argument");
    const std::string text = experiments::resolve(cfg->req).resolved_text();
    *needed = text.size() + 1;
    if (!buf || capacity < *needed) throw invalid_argument("buffer too small");
    std::memcpy(buf, text.c_str(), text.size() + 1);
    return HG_OK;
  });
}

void hg_run_config_free(hg_run_config* cfg) { delete cfg; }

hg_status hg_run(const hg_run_config* cfg, const char* out_root, int verbose, char* run_dir, size_t capacity) {
  return guarded([&] {
    if (!cfg) throw invalid_argument("null argument");
    auto req = cfg->req;
    if (out_root) req.out_root = out_root;
    req.log = verbose ? &std::cerr : nullptr;
    auto res = experiments::run(req);
    if (run_dir && capacity > 0) {
      std::strncpy(run_dir, res.run_dir.c_str(), capacity - 1);
      run_dir[capacity - 1] = '\0';
    }
    if (res.status == experiments::Status::Ok) return HG_OK;
    g_last_error = res.message;
    return static_cast<hg_status>(res.status);
  });
}

}  // extern "C"
