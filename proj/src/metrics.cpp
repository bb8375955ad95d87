#include "haegan/metrics.hpp"

#include <cmath>
#include <queue>

#include "haegan/error.hpp"

namespace haegan::metrics {

namespace {

std::vector<std::vector<int>> adjacency(const TreeGraph& t) {
  std::vector<std::vector<int>> adj(t.node_count());
  for (auto [a, b] : t.edges()) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  return adj;
}

std::vector<int> bfs_distances(const std::vector<std::vector<int>>& adj, int s, std::vector<int>* order,
                               std::vector<int>* pred) {
  std::vector<int> dist(adj.size(), -1);
  if (pred) pred->assign(adj.size(), -1);
  if (order) order->clear();
  std::queue<int> q;
  dist[s] = 0;
  q.push(s);
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    if (order) order->push_back(v);
    for (int w : adj[v]) {
      if (dist[w] >= 0) continue;
      dist[w] = dist[v] + 1;
      if (pred) (*pred)[w] = v;
      q.push(w);
    }
  }
  return dist;
}

double tree_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::vector<double> degree_histogram(const TreeGraph& t) {
  const std::size_t n = t.node_count();
  std::vector<std::size_t> counts;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t d = t.degree(i);
    if (d >= counts.size()) counts.resize(d + 1, 0);
    ++counts[d];
  }
  std::vector<double> h(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) h[k] = static_cast<double>(counts[k]) / static_cast<double>(n);
  return h;
}

double wasserstein1(const std::vector<double>& p, const std::vector<double>& q) {
  const std::size_t m = std::max(p.size(), q.size());
  double cp = 0.0, cq = 0.0, w = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    cp += k < p.size() ? p[k] : 0.0;
    cq += k < q.size() ? q[k] : 0.0;
    w += std::abs(cp - cq);
  }
  return w;
}

double mmd(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b, double sigma) {
  if (a.empty() || b.empty()) throw invalid_argument("mmd: both sets must be non-empty");
  if (!(sigma > 0.0)) throw invalid_argument("mmd: sigma must be positive");
  auto kernel = [&](const std::vector<double>& p, const std::vector<double>& q) {
    double w = wasserstein1(p, q);
    return std::exp(-w * w / (2.0 * sigma * sigma));
  };
  auto mean_kernel = [&](const auto& x, const auto& y) {
    double s = 0.0;
    for (const auto& p : x)
      for (const auto& q : y) s += kernel(p, q);
    return s / (static_cast<double>(x.size()) * static_cast<double>(y.size()));
  };
  return mean_kernel(a, a) + mean_kernel(b, b) - 2.0 * mean_kernel(a, b);
}

double degree_mmd(const std::vector<TreeGraph>& a, const std::vector<TreeGraph>& b, double sigma) {
  std::vector<std::vector<double>> ha, hb;
  for (const auto& t : a) ha.push_back(degree_histogram(t));
  for (const auto& t : b) hb.push_back(degree_histogram(t));
  return mmd(ha, hb, sigma);
}

std::vector<double> betweenness(const TreeGraph& t) {
  const std::size_t n = t.node_count();
  std::vector<double> cb(n, 0.0);
  if (n <= 2) return cb;
  auto adj = adjacency(t);
  std::vector<int> order, pred;
  // Dependency accumulation; shortest paths in a tree are unique.
  for (std::size_t s = 0; s < n; ++s) {
    bfs_distances(adj, static_cast<int>(s), &order, &pred);
    std::vector<double> delta(n, 0.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      int w = *it;
      if (pred[w] >= 0) delta[pred[w]] += 1.0 + delta[w];
      if (w != static_cast<int>(s)) cb[w] += delta[w];
    }
  }
  // Each unordered pair was counted from both ends.
  const double norm = static_cast<double>((n - 1) * (n - 2));
  for (auto& c : cb) c /= norm;
  return cb;
}

std::vector<double> closeness(const TreeGraph& t) {
  const std::size_t n = t.node_count();
  std::vector<double> cc(n, 0.0);
  if (n == 1) return cc;
  auto adj = adjacency(t);
  for (std::size_t s = 0; s < n; ++s) {
    auto dist = bfs_distances(adj, static_cast<int>(s), nullptr, nullptr);
    double sum = 0.0;
    for (int d : dist) sum += d;
    cc[s] = static_cast<double>(n - 1) / sum;
  }
  return cc;
}

double centrality_avg_diff(const std::vector<TreeGraph>& a, const std::vector<TreeGraph>& b, Centrality kind) {
  if (a.empty() || b.empty()) throw invalid_argument("centrality_avg_diff: both sets must be non-empty");
  auto set_mean = [&](const std::vector<TreeGraph>& s) {
    double sum = 0.0;
    for (const auto& t : s) sum += tree_mean(kind == Centrality::Betweenness ? betweenness(t) : closeness(t));
    return sum / static_cast<double>(s.size());
  };
  return std::abs(set_mean(a) - set_mean(b));
}

MetricsReport evaluate(const std::vector<TreeGraph>& generated, const std::vector<TreeGraph>& reference,
                       double sigma) {
  MetricsReport r;
  r.degree_mmd = degree_mmd(generated, reference, sigma);
  r.betweenness_avg_diff = centrality_avg_diff(generated, reference, Centrality::Betweenness);
  r.closeness_avg_diff = centrality_avg_diff(generated, reference, Centrality::Closeness);
  r.generated_count = generated.size();
  r.reference_count = reference.size();
  r.sigma = sigma;
  return r;
}

}  // namespace haegan::metrics
