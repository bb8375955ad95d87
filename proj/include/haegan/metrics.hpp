#pragma once

// Tree-set comparison metrics: degree-distribution MMD and differences of
// average betweenness / closeness centrality.

#include <string>
#include <vector>

#include "haegan/tree.hpp"

namespace haegan::metrics {

using tree::TreeGraph;

// Entry k is the fraction of nodes with degree k.
std::vector<double> degree_histogram(const TreeGraph& t);

// First Wasserstein distance between two distributions on {0, 1, 2, ...}.
double wasserstein1(const std::vector<double>& p, const std::vector<double>& q);

// Biased (V-statistic) squared MMD with k(p,q) = exp(-W1(p,q)^2 / (2 sigma^2)).
double mmd(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b, double sigma = 1.0);
double degree_mmd(const std::vector<TreeGraph>& a, const std::vector<TreeGraph>& b, double sigma = 1.0);

// Normalized by (n-1)(n-2)/2; zero for n <= 2.
std::vector<double> betweenness(const TreeGraph& t);
// (n-1) / sum of distances; zero for a single node.
std::vector<double> closeness(const TreeGraph& t);

enum class Centrality { Betweenness, Closeness };
// |mean_a - mean_b| where each set mean is the mean of per-tree node averages.
double centrality_avg_diff(const std::vector<TreeGraph>& a, const std::vector<TreeGraph>& b, Centrality kind);

struct MetricsReport {
  double degree_mmd = 0.0;
  double betweenness_avg_diff = 0.0;
  double closeness_avg_diff = 0.0;
  std::size_t generated_count = 0;
  std::size_t reference_count = 0;
  double sigma = 1.0;
};

MetricsReport evaluate(const std::vector<TreeGraph>& generated, const std::vector<TreeGraph>& reference,
                       double sigma = 1.0);

}  // namespace haegan::metrics
