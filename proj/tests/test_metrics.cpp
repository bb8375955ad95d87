#include <cmath>
#include <functional>

#include "doctest.h"
#include "haegan/error.hpp"
#include "haegan/metrics.hpp"

using namespace haegan;
using namespace haegan::metrics;
using haegan::tree::TreeGraph;

namespace {

TreeGraph path(int n) {
  std::vector<int> p{-1};
  for (int i = 1; i < n; ++i) p.push_back(i - 1);
  return TreeGraph(p);
}

TreeGraph star(int n) {
  std::vector<int> p{-1};
  for (int i = 1; i < n; ++i) p.push_back(0);
  return TreeGraph(p);
}

std::vector<int> path_between(const TreeGraph& t, int a, int b) {
  auto ancestors = [&](int v) {
    std::vector<int> out{v};
    while (t.parent(v) >= 0) out.push_back(v = t.parent(v));
    return out;
  };
  auto pa = ancestors(a), pb = ancestors(b);
  while (pa.size() > 1 && pb.size() > 1 && pa[pa.size() - 2] == pb[pb.size() - 2]) {
    pa.pop_back();
    pb.pop_back();
  }
  std::vector<int> out(pa.begin(), pa.end());
  for (auto it = pb.rbegin() + 1; it != pb.rend(); ++it) out.push_back(*it);
  return out;
}

// Counts, for every node, the unordered pairs whose unique path passes through it.
std::vector<double> brute_betweenness(const TreeGraph& t) {
  const int n = static_cast<int>(t.node_count());
  std::vector<double> c(n, 0.0);
  if (n <= 2) return c;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      auto p = path_between(t, a, b);
      for (std::size_t k = 1; k + 1 < p.size(); ++k) c[p[k]] += 1.0;
    }
  for (auto& x : c) x /= (n - 1) * (n - 2) / 2.0;
  return c;
}

std::vector<double> brute_closeness(const TreeGraph& t) {
  const int n = static_cast<int>(t.node_count());
  std::vector<double> c(n, 0.0);
  if (n == 1) return c;
  for (int a = 0; a < n; ++a) {
    double s = 0.0;
    for (int b = 0; b < n; ++b)
      if (a != b) s += static_cast<double>(path_between(t, a, b).size() - 1);
    c[a] = (n - 1) / s;
  }
  return c;
}

void for_each_tree(int n, const std::function<void(const TreeGraph&)>& f) {
  if (n == 1) return f(TreeGraph());
  if (n == 2) return f(TreeGraph(std::vector<int>{-1, 0}));
  std::vector<int> seq(n - 2, 0);
  while (true) {
    f(tree::prufer_decode(seq));
    int i = 0;
    while (i < n - 2 && ++seq[i] == n) seq[i++] = 0;
    if (i == n - 2) break;
  }
}

}  // namespace

TEST_CASE("degree histograms") {
  auto h = degree_histogram(path(3));
  REQUIRE(h.size() == 3);
  CHECK(h[0] == 0.0);
  CHECK(h[1] == doctest::Approx(2.0 / 3.0));
  CHECK(h[2] == doctest::Approx(1.0 / 3.0));
  for (int n : {3, 5, 9}) {
    auto s = degree_histogram(star(n));
    CHECK(s[1] == doctest::Approx((n - 1.0) / n));
    CHECK(s[n - 1] == doctest::Approx(1.0 / n));
  }
  CHECK(degree_histogram(TreeGraph()) == std::vector<double>{1.0});
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    auto hh = degree_histogram(tree::random_tree(rng, 1, 64));
    double s = 0.0;
    for (double x : hh) s += x;
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("wasserstein between histograms") {
  CHECK(wasserstein1({1.0}, {0.0, 1.0}) == 1.0);
  CHECK(wasserstein1({0.0, 0.5, 0.5}, {0.0, 0.5, 0.5}) == 0.0);
  CHECK(wasserstein1({1.0}, {0.0, 0.0, 0.0, 1.0}) == 3.0);
}

TEST_CASE("mmd properties") {
  std::vector<double> p{0.0, 0.6, 0.3, 0.1}, q{0.0, 0.5, 0.2, 0.2, 0.1};
  CHECK(std::abs(mmd({p, q}, {p, q})) <= 1e-12);
  double w = wasserstein1(p, q);
  double kpq = std::exp(-w * w / 2.0);
  CHECK(mmd({p}, {q}) == doctest::Approx(2.0 - 2.0 * kpq).epsilon(1e-12));
  CHECK(mmd({p, q}, {q}) == doctest::Approx(mmd({q}, {p, q})).epsilon(1e-12));
  CHECK(mmd({p, q, q}, {q}) == doctest::Approx(mmd({q, p, q}, {q})).epsilon(1e-12));

  // B differs from A in one element; moving it onto A's histogram cannot increase MMD.
  // (With several differing elements the V-statistic is not monotone in general.)
  Rng rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto random_hist = [&] {
    std::vector<double> h(5);
    double s = 0.0;
    for (auto& x : h) s += (x = u(rng));
    for (auto& x : h) x /= s;
    return h;
  };
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<double>> A{random_hist(), random_hist(), random_hist()};
    for (int k = 0; k < 3; ++k) {
      auto B = A;
      B[k] = random_hist();
      double before = mmd(A, B);
      CHECK(before >= -1e-12);
      B[k] = A[k];
      CHECK(mmd(A, B) <= before + 1e-12);
    }
  }
  CHECK_THROWS_AS(mmd({}, {p}), Error);
}

TEST_CASE("centrality examples") {
  auto b = betweenness(path(3));
  CHECK(b[1] == 1.0);
  CHECK(b[0] == 0.0);
  CHECK(b[2] == 0.0);
  double avg = (b[0] + b[1] + b[2]) / 3.0;
  CHECK(avg == doctest::Approx(1.0 / 3.0));
  CHECK(closeness(star(4))[0] == 1.0);
  CHECK(closeness(TreeGraph())[0] == 0.0);
  std::vector<TreeGraph> s{path(5), star(6)};
  CHECK(centrality_avg_diff(s, s, Centrality::Betweenness) == 0.0);
  CHECK(centrality_avg_diff(s, s, Centrality::Closeness) == 0.0);
  CHECK(centrality_avg_diff({path(3)}, {star(4)}, Centrality::Closeness) ==
        doctest::Approx(std::abs((2.0 / 3.0 + 1.0 + 2.0 / 3.0) / 3.0 - (1.0 + 3 * 0.6) / 4.0)));
}

TEST_CASE("centralities match brute force on all trees up to 8 nodes") {
  double worst_b = 0.0, worst_c = 0.0;
  std::size_t count = 0;
  for (int n = 1; n <= 8; ++n) {
    for_each_tree(n, [&](const TreeGraph& t) {
      auto fb = betweenness(t), bb = brute_betweenness(t);
      auto fc = closeness(t), bc = brute_closeness(t);
      for (std::size_t i = 0; i < fb.size(); ++i) {
        worst_b = std::max(worst_b, std::abs(fb[i] - bb[i]));
        worst_c = std::max(worst_c, std::abs(fc[i] - bc[i]));
      }
      ++count;
    });
  }
  CHECK(count == 1 + 1 + 3 + 16 + 125 + 1296 + 16807 + 262144);
  CHECK(worst_b <= 1e-12);
  CHECK(worst_c <= 1e-12);
}

TEST_CASE("evaluation report") {
  Rng rng(3);
  std::vector<TreeGraph> a, b;
  for (int i = 0; i < 30; ++i) a.push_back(tree::random_tree(rng, 5, 20));
  for (int i = 0; i < 30; ++i) b.push_back(tree::random_tree(rng, 5, 20));
  auto self = evaluate(a, a);
  CHECK(std::abs(self.degree_mmd) <= 1e-12);
  CHECK(self.betweenness_avg_diff == 0.0);
  auto r = evaluate(a, b);
  CHECK(std::isfinite(r.degree_mmd));
  CHECK(r.degree_mmd >= -1e-12);
  CHECK(r.generated_count == 30);
  CHECK(r.reference_count == 30);
}
