#include "mbest/stcover.hpp"

#include <algorithm>
#include <numeric>

namespace mbest {
namespace {

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int a) {
    while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
    return a;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<int> parent_;
};

Edge canonical(Edge e) {
  if (e.first > e.second) std::swap(e.first, e.second);
  return e;
}

void require_tree_in_model(const MrfModel& model, const SpanningTree& tree) {
  if (tree.num_nodes() != model.num_nodes())
    throw InvalidInput("spanning tree is over " +
                       std::to_string(tree.num_nodes()) + " nodes, model has " +
                       std::to_string(model.num_nodes()));
  for (const auto& [i, j] : tree.edges)
    if (model.edge_index(i, j) < 0)
      throw InvalidInput("tree edge (" + std::to_string(i) + ", " +
                         std::to_string(j) + ") is absent from the model");
}

std::vector<Edge> grid_edge_set(int rows, int cols) {
  std::vector<Edge> edges;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int id = r * cols + c;
      if (c + 1 < cols) edges.push_back({id, id + 1});
      if (r + 1 < rows) edges.push_back({id, id + cols});
    }
  return edges;
}

// Detects a rows x cols grid with row-major node ids (both sides >= 2).
bool detect_grid(const MrfModel& model, int& rows, int& cols) {
  const int n = model.num_nodes();
  std::vector<Edge> sorted = model.edges();
  std::sort(sorted.begin(), sorted.end());
  for (int h = 2; h * 2 <= n; ++h) {
    if (n % h != 0) continue;
    const int w = n / h;
    if (w < 2) continue;
    if (static_cast<int>(sorted.size()) != h * (w - 1) + w * (h - 1)) continue;
    std::vector<Edge> grid = grid_edge_set(h, w);
    std::sort(grid.begin(), grid.end());
    if (grid == sorted) {
      rows = h;
      cols = w;
      return true;
    }
  }
  return false;
}

}  // namespace

bool operator==(const SpanningTree& a, const SpanningTree& b) {
  return a.num_nodes() == b.num_nodes() && a.edges == b.edges;
}

SpanningTree make_spanning_tree(int num_nodes, std::vector<Edge> edges) {
  if (num_nodes < 1) throw InvalidInput("spanning tree needs >= 1 node");
  for (auto& e : edges) e = canonical(e);
  std::sort(edges.begin(), edges.end());
  if (num_nodes == 1) {
    if (!edges.empty())
      throw InvalidInput("single-node tree cannot have edges");
    return {{}, {0}};
  }
  if (static_cast<int>(edges.size()) != num_nodes - 1)
    throw InvalidInput("spanning tree on " + std::to_string(num_nodes) +
                       " nodes needs " + std::to_string(num_nodes - 1) +
                       " edges, got " + std::to_string(edges.size()));
  SpanningTree tree;
  tree.degrees.assign(num_nodes, 0);
  DisjointSets sets(num_nodes);
  for (const auto& [i, j] : edges) {
    if (i < 0 || j >= num_nodes || i == j)
      throw InvalidInput("invalid tree edge (" + std::to_string(i) + ", " +
                         std::to_string(j) + ")");
    if (!sets.unite(i, j))
      throw InvalidInput("tree edges contain a cycle at (" +
                         std::to_string(i) + ", " + std::to_string(j) + ")");
    ++tree.degrees[i];
    ++tree.degrees[j];
  }
  tree.edges = std::move(edges);
  return tree;
}

double tree_inequality_value(const MrfModel& model, const Labeling& x,
                             const Labeling& x_m, const SpanningTree& tree) {
  require_tree_in_model(model, tree);
  model.require_valid_labeling(x);
  model.require_valid_labeling(x_m);
  double value = 0.0;
  for (int i = 0; i < model.num_nodes(); ++i)
    if (x[i] == x_m[i]) value += 1.0 - tree.degrees[i];
  for (const auto& [i, j] : tree.edges)
    if (x[i] == x_m[i] && x[j] == x_m[j]) value += 1.0;
  return value;
}

double tree_inequality_value(const MrfModel& model, const FractionalPrimal& mu,
                             const Labeling& x_m, const SpanningTree& tree) {
  require_tree_in_model(model, tree);
  model.require_valid_labeling(x_m);
  double value = 0.0;
  for (int i = 0; i < model.num_nodes(); ++i)
    value += (1.0 - tree.degrees[i]) * mu.node_marginals[i][x_m[i]];
  for (const auto& [i, j] : tree.edges) {
    const int e = model.edge_index(i, j);
    value += mu.edge_marginals[e](x_m[i], x_m[j]);
  }
  return value;
}

Vector separation_weights(const MrfModel& model, const FractionalPrimal& mu,
                          const Labeling& x_m) {
  model.require_valid_labeling(x_m);
  Vector w(model.num_edges());
  for (int e = 0; e < model.num_edges(); ++e) {
    const auto& [i, j] = model.edge(e);
    w[e] = mu.edge_marginals[e](x_m[i], x_m[j]) -
           mu.node_marginals[i][x_m[i]] - mu.node_marginals[j][x_m[j]];
  }
  return w;
}

Vector separation_weights(const MrfModel& model, const Labeling& x_hat,
                          const Labeling& x_m) {
  model.require_valid_labeling(x_hat);
  model.require_valid_labeling(x_m);
  Vector w(model.num_edges());
  for (int e = 0; e < model.num_edges(); ++e) {
    const auto& [i, j] = model.edge(e);
    const double ai = x_hat[i] == x_m[i] ? 1.0 : 0.0;
    const double aj = x_hat[j] == x_m[j] ? 1.0 : 0.0;
    w[e] = ai * aj - ai - aj;
  }
  return w;
}

SpanningTree max_weight_spanning_tree(int num_nodes,
                                      const std::vector<Edge>& edges,
                                      const Vector& weights) {
  if (weights.size() != static_cast<Eigen::Index>(edges.size()))
    throw InvalidInput("one weight per edge required");
  if (num_nodes == 1) return make_spanning_tree(1, {});

  std::vector<int> ids(edges.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::vector<Edge> canon(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) canon[e] = canonical(edges[e]);
  std::sort(ids.begin(), ids.end(), [&](int a, int b) {
    if (weights[a] != weights[b]) return weights[a] > weights[b];
    return canon[a] < canon[b];
  });

  DisjointSets sets(num_nodes);
  std::vector<Edge> picked;
  picked.reserve(num_nodes - 1);
  for (int e : ids) {
    if (sets.unite(canon[e].first, canon[e].second)) {
      picked.push_back(canon[e]);
      if (static_cast<int>(picked.size()) == num_nodes - 1) break;
    }
  }
  if (static_cast<int>(picked.size()) != num_nodes - 1)
    throw InvalidInput("graph is disconnected: no spanning tree exists");
  return make_spanning_tree(num_nodes, std::move(picked));
}

TreeCover build_tree_cover(const MrfModel& model) {
  const int n = model.num_nodes();
  if (!model.is_connected())
    throw InvalidInput("tree cover requires a connected graph");

  TreeCover cover;
  cover.edge_multiplicity.assign(model.num_edges(), 0);

  auto add_tree = [&](SpanningTree tree) {
    for (const auto& [i, j] : tree.edges)
      ++cover.edge_multiplicity[model.edge_index(i, j)];
    cover.trees.push_back(std::move(tree));
  };

  if (model.is_forest()) {  // connected + acyclic: the graph is the cover
    add_tree(make_spanning_tree(n, model.edges()));
    return cover;
  }

  int rows = 0, cols = 0;
  if (detect_grid(model, rows, cols)) {
    std::vector<Edge> horizontal, vertical;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c + 1 < cols; ++c)
        horizontal.push_back({r * cols + c, r * cols + c + 1});
    for (int r = 0; r + 1 < rows; ++r)
      for (int c = 0; c < cols; ++c)
        vertical.push_back({r * cols + c, (r + 1) * cols + c});

    std::vector<Edge> t1 = horizontal;  // plus the first column
    for (int r = 0; r + 1 < rows; ++r)
      t1.push_back({r * cols, (r + 1) * cols});
    std::vector<Edge> t2 = vertical;  // plus the first row
    for (int c = 0; c + 1 < cols; ++c) t2.push_back({c, c + 1});

    add_tree(make_spanning_tree(n, std::move(t1)));
    add_tree(make_spanning_tree(n, std::move(t2)));
    return cover;
  }

  // General graphs: repeatedly pull a spanning tree that prefers edges not
  // yet covered; every round covers at least one new edge.
  std::vector<bool> covered(model.num_edges(), false);
  int remaining = model.num_edges();
  while (remaining > 0) {
    Vector w(model.num_edges());
    for (int e = 0; e < model.num_edges(); ++e) w[e] = covered[e] ? 0.0 : 1.0;
    SpanningTree tree = max_weight_spanning_tree(n, model.edges(), w);
    for (const auto& [i, j] : tree.edges) {
      const int e = model.edge_index(i, j);
      if (!covered[e]) {
        covered[e] = true;
        --remaining;
      }
    }
    add_tree(std::move(tree));
  }
  return cover;
}

SplitEnergies split_energies(const MrfModel& model, const TreeCover& cover) {
  const int p = static_cast<int>(cover.trees.size());
  if (p == 0) throw InvalidInput("empty tree cover");
  for (const auto& tree : cover.trees) require_tree_in_model(model, tree);
  for (int e = 0; e < model.num_edges(); ++e)
    if (cover.edge_multiplicity[e] < 1)
      throw InvalidInput("cover misses edge " + std::to_string(e));

  SplitEnergies split;
  split.unary.resize(p);
  split.pairwise.resize(p);
  for (int t = 0; t < p; ++t) {
    split.unary[t].reserve(model.num_nodes());
    for (int i = 0; i < model.num_nodes(); ++i)
      split.unary[t].push_back(model.unary(i) / p);
    const auto& tree = cover.trees[t];
    split.pairwise[t].reserve(tree.edges.size());
    for (const auto& [i, j] : tree.edges) {
      const int e = model.edge_index(i, j);
      split.pairwise[t].push_back(model.pairwise(e) /
                                  cover.edge_multiplicity[e]);
    }
  }
  return split;
}

}  // namespace mbest
