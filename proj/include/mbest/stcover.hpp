#pragma once

#include <vector>

#include "mbest/model.hpp"

namespace mbest {

/// Spanning tree of a host graph on num_nodes() nodes. Edges are kept
/// canonical and sorted lexicographically, which doubles as the tree's
/// identity inside active sets. A single-node graph has the degenerate tree
/// with no edges and degree 0.
struct SpanningTree {
  std::vector<Edge> edges;
  std::vector<int> degrees;  // node degree within the tree

  int num_nodes() const { return static_cast<int>(degrees.size()); }
};

bool operator==(const SpanningTree& a, const SpanningTree& b);

/// Validates connectivity/acyclicity and computes degrees.
SpanningTree make_spanning_tree(int num_nodes, std::vector<Edge> edges);

/// Value of the exclusion inequality
///   sum_i (1 - d_i^T) mu_i . mu^m_i  +  sum_{(i,j) in T} mu_ij . mu^m_ij
/// which equals 1 at mu = mu^m and is <= 0 at every other integer labeling.
/// Throws InvalidInput if the tree uses edges absent from the model.
double tree_inequality_value(const MrfModel& model, const Labeling& x,
                             const Labeling& x_m, const SpanningTree& tree);
double tree_inequality_value(const MrfModel& model, const FractionalPrimal& mu,
                             const Labeling& x_m, const SpanningTree& tree);

/// Separation-oracle edge weights, one per model edge:
///   w_ij = mu_ij(x^m_i, x^m_j) - mu_i(x^m_i) - mu_j(x^m_j).
Vector separation_weights(const MrfModel& model, const FractionalPrimal& mu,
                          const Labeling& x_m);
Vector separation_weights(const MrfModel& model, const Labeling& x_hat,
                          const Labeling& x_m);

/// Greedy maximum-weight spanning tree (descending-weight edge selection).
/// Ties are broken by canonical edge order, smaller pair first, so the
/// result is deterministic. Throws InvalidInput on disconnected graphs.
SpanningTree max_weight_spanning_tree(int num_nodes,
                                      const std::vector<Edge>& edges,
                                      const Vector& weights);

/// Set of trees jointly containing every edge of the host graph.
struct TreeCover {
  std::vector<SpanningTree> trees;
  std::vector<int> edge_multiplicity;  // per host edge, >= 1
};

/// Cover construction: the graph itself for trees; the two-tree
/// decomposition for row-major grid graphs (all horizontal edges plus one
/// column, all vertical edges plus one row); greedy residual covering of
/// not-yet-covered edges otherwise. Requires a connected graph.
TreeCover build_tree_cover(const MrfModel& model);

/// Per-tree energies that resum to the model's: node energies split evenly
/// over all cover members, edge energies evenly over the members containing
/// the edge.
struct SplitEnergies {
  std::vector<std::vector<Vector>> unary;     // [tree][node]
  std::vector<std::vector<Matrix>> pairwise;  // [tree][k], trees[t].edges[k]
};

SplitEnergies split_energies(const MrfModel& model, const TreeCover& cover);

}  // namespace mbest
