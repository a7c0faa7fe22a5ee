#pragma once

#include <vector>

#include "mbest/model.hpp"

namespace mbest {

/// Leaves-to-root traversal of an acyclic graph; one root per component.
struct TreeOrder {
  std::vector<int> roots;
  std::vector<int> parent;       // -1 at roots
  std::vector<int> parent_edge;  // edge id towards the parent, -1 at roots
  std::vector<int> visit_order;  // every node once, children before parents
};

/// Throws InvalidInput if the edge set contains a cycle.
TreeOrder build_tree_order(int num_nodes, const std::vector<Edge>& edges);
TreeOrder build_tree_order(const MrfModel& model);

struct TreeMapResult {
  Labeling labeling;
  double value = 0.0;  // equals energy(model, labeling) exactly
};

/// Exact MAP on a tree- or forest-structured model via two-pass min-sum
/// belief propagation. Ties pick the smallest label index at every message
/// and at the root, so identical inputs decode identically. Messages are
/// min-normalized before being stored; the optimum is re-evaluated from the
/// energy tables at the decoded labeling.
TreeMapResult tree_map(const MrfModel& model);

/// Variant reusing a traversal built on the same topology.
TreeMapResult tree_map(const MrfModel& model, const TreeOrder& order);

/// Optimum value only.
double tree_map_value(const MrfModel& model);

}  // namespace mbest
