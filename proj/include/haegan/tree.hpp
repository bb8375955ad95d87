#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "haegan/rng.hpp"

namespace haegan::tree {

// Unlabeled rooted tree; node 0 is the root. Children are kept in ascending
// node order, which fixes the depth-first traversal.
class TreeGraph {
 public:
  TreeGraph() : TreeGraph(std::vector<int>{-1}) {}
  // parent[0] must be -1; every other entry names a node in [0, n).
  explicit TreeGraph(std::vector<int> parent);
  // Undirected edge list over nodes [0, n), rooted at node 0.
  static TreeGraph from_edges(std::size_t n, const std::vector<std::pair<int, int>>& edges);

  std::size_t node_count() const { return parent_.size(); }
  std::size_t edge_count() const { return parent_.size() - 1; }
  int parent(std::size_t i) const { return parent_[i]; }
  const std::vector<int>& parents() const { return parent_; }
  const std::vector<int>& children(std::size_t i) const { return children_[i]; }
  std::size_t degree(std::size_t i) const;
  std::vector<std::pair<int, int>> edges() const;

  bool operator==(const TreeGraph& o) const { return parent_ == o.parent_; }

 private:
  std::vector<int> parent_;
  std::vector<std::vector<int>> children_;
};

// Standard Pruefer decoding of a sequence over [0, n) with n = seq.size() + 2.
TreeGraph prufer_decode(const std::vector<int>& seq);

// n ~ U{min_nodes..max_nodes}, then a uniform Pruefer sequence.
TreeGraph random_tree(Rng& rng, std::size_t min_nodes, std::size_t max_nodes);

// One decision per step of the depth-first traversal: at `node`, either expand
// a new child (true) or backtrack to the parent (false). A tree with n nodes
// yields 2(n-1) + 1 decisions; the final one is the root's backtrack.
struct Decision {
  int node;
  bool expand;
};
std::vector<Decision> dfs_decisions(const TreeGraph& t);

// Rebuilds a tree from a decision sequence. Throws if the sequence is malformed.
TreeGraph replay_decisions(const std::vector<Decision>& seq);

// "n p1 p2 ... p_{n-1}" per tree.
std::string serialize(const TreeGraph& t);
TreeGraph parse_tree(const std::string& line);
void write_trees(std::ostream& os, const std::vector<TreeGraph>& trees);
std::vector<TreeGraph> read_trees(std::istream& is);
void save_trees(const std::string& path, const std::vector<TreeGraph>& trees);
std::vector<TreeGraph> load_trees(const std::string& path);

}  // namespace haegan::tree
