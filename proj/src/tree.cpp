#include "haegan/tree.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include "haegan/error.hpp"

namespace haegan::tree {

TreeGraph::TreeGraph(std::vector<int> parent) : parent_(std::move(parent)) {
  const std::size_t n = parent_.size();
  if (n == 0) throw invalid_argument("tree must have at least one node");
  if (parent_[0] != -1) throw invalid_argument("tree root must have parent -1");
  children_.assign(n, {});
  for (std::size_t i = 1; i < n; ++i) {
    if (parent_[i] < 0 || static_cast<std::size_t>(parent_[i]) >= n || parent_[i] == static_cast<int>(i)) {
      throw invalid_argument("tree: invalid parent for node " + std::to_string(i));
    }
    children_[parent_[i]].push_back(static_cast<int>(i));
  }
  // Every node must reach the root without revisiting a node.
  std::vector<char> state(n, 0);  // 0 unknown, 1 in progress, 2 reaches root
  state[0] = 2;
  for (std::size_t i = 1; i < n; ++i) {
    std::vector<std::size_t> path;
    std::size_t v = i;
    while (state[v] == 0) {
      state[v] = 1;
      path.push_back(v);
      v = static_cast<std::size_t>(parent_[v]);
    }
    if (state[v] == 1) throw invalid_argument("tree: parent array contains a cycle");
    for (auto p : path) state[p] = 2;
  }
}

TreeGraph TreeGraph::from_edges(std::size_t n, const std::vector<std::pair<int, int>>& edges) {
  if (n == 0) throw invalid_argument("tree must have at least one node");
  if (edges.size() != n - 1) throw invalid_argument("tree on n nodes needs n-1 edges");
  std::vector<std::vector<int>> adj(n);
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n || static_cast<std::size_t>(b) >= n || a == b) {
      throw invalid_argument("tree: invalid edge");
    }
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<int> parent(n, -2);
  parent[0] = -1;
  std::queue<int> q;
  q.push(0);
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (int w : adj[v]) {
      if (parent[w] != -2) continue;
      parent[w] = v;
      q.push(w);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (parent[i] == -2) throw invalid_argument("tree: edge list is not connected");
  }
  return TreeGraph(std::move(parent));
}

std::size_t TreeGraph::degree(std::size_t i) const { return children_[i].size() + (i == 0 ? 0 : 1); }

std::vector<std::pair<int, int>> TreeGraph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 1; i < parent_.size(); ++i) out.emplace_back(parent_[i], static_cast<int>(i));
  return out;
}

TreeGraph prufer_decode(const std::vector<int>& seq) {
  const std::size_t n = seq.size() + 2;
  std::vector<int> degree(n, 1);
  for (int s : seq) {
    if (s < 0 || static_cast<std::size_t>(s) >= n) throw invalid_argument("prufer: label out of range");
    ++degree[s];
  }
  std::set<int> leaves;
  for (std::size_t i = 0; i < n; ++i)
    if (degree[i] == 1) leaves.insert(static_cast<int>(i));
  std::vector<std::pair<int, int>> edges;
  for (int s : seq) {
    int leaf = *leaves.begin();
    leaves.erase(leaves.begin());
    edges.emplace_back(leaf, s);
    if (--degree[s] == 1) leaves.insert(s);
  }
  int u = *leaves.begin();
  int w = *std::next(leaves.begin());
  edges.emplace_back(u, w);
  return TreeGraph::from_edges(n, edges);
}

TreeGraph random_tree(Rng& rng, std::size_t min_nodes, std::size_t max_nodes) {
  if (min_nodes < 1 || max_nodes < min_nodes) throw invalid_argument("random_tree: need 1 <= min_nodes <= max_nodes");
  const std::size_t n = std::uniform_int_distribution<std::size_t>(min_nodes, max_nodes)(rng);
  if (n == 1) return TreeGraph();
  if (n == 2) return TreeGraph(std::vector<int>{-1, 0});
  std::uniform_int_distribution<int> label(0, static_cast<int>(n) - 1);
  std::vector<int> seq(n - 2);
  for (auto& s : seq) s = label(rng);
  return prufer_decode(seq);
}

std::vector<Decision> dfs_decisions(const TreeGraph& t) {
  std::vector<Decision> out;
  out.reserve(2 * t.edge_count() + 1);
  // Explicit stack of (node, next child index).
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto& [v, idx] = stack.back();
    const auto& ch = t.children(v);
    if (idx < ch.size()) {
      out.push_back({v, true});
      int c = ch[idx++];
      stack.emplace_back(c, 0);
    } else {
      out.push_back({v, false});
      stack.pop_back();
    }
  }
  return out;
}

TreeGraph replay_decisions(const std::vector<Decision>& seq) {
  std::vector<int> parent{-1};
  std::vector<int> stack{0};
  for (std::size_t k = 0; k < seq.size(); ++k) {
    if (stack.empty()) throw invalid_argument("replay: decisions continue after the root backtracked");
    if (seq[k].expand) {
      parent.push_back(stack.back());
      stack.push_back(static_cast<int>(parent.size() - 1));
    } else {
      stack.pop_back();
    }
  }
  if (!stack.empty()) throw invalid_argument("replay: sequence ends before the root backtracks");
  return TreeGraph(std::move(parent));
}

std::string serialize(const TreeGraph& t) {
  std::ostringstream os;
  os << t.node_count();
  for (std::size_t i = 1; i < t.node_count(); ++i) os << ' ' << t.parent(i);
  return os.str();
}

TreeGraph parse_tree(const std::string& line) {
  std::istringstream is(line);
  long long n = 0;
  if (!(is >> n) || n < 1) throw io_error("tree line must start with a positive node count: '" + line + "'");
  std::vector<int> parent{-1};
  for (long long i = 1; i < n; ++i) {
    int p;
    if (!(is >> p)) throw io_error("tree line has too few parent entries: '" + line + "'");
    parent.push_back(p);
  }
  std::string extra;
  if (is >> extra) throw io_error("tree line has trailing data: '" + line + "'");
  try {
    return TreeGraph(std::move(parent));
  } catch (const Error& e) {
    throw io_error(std::string("invalid tree: ") + e.what());
  }
}

void write_trees(std::ostream& os, const std::vector<TreeGraph>& trees) {
  for (const auto& t : trees) os << serialize(t) << '\n';
}

std::vector<TreeGraph> read_trees(std::istream& is) {
  std::vector<TreeGraph> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_tree(line));
  }
  return out;
}

void save_trees(const std::string& path, const std::vector<TreeGraph>& trees) {
  std::ofstream os(path);
  if (!os) throw io_error("cannot write " + path);
  write_trees(os, trees);
  if (!os) throw io_error("failed writing " + path);
}

std::vector<TreeGraph> load_trees(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot read " + path);
  return read_trees(is);
}

}  // namespace haegan::tree
