#include "mbest/treebp.hpp"

#include <algorithm>

namespace mbest {

TreeOrder build_tree_order(int num_nodes, const std::vector<Edge>& edges) {
  if (static_cast<int>(edges.size()) >= num_nodes)
    throw InvalidInput("edge set has a cycle: " + std::to_string(edges.size()) +
                       " edges on " + std::to_string(num_nodes) + " nodes");

  std::vector<std::vector<std::pair<int, int>>> adj(num_nodes);  // (nbr, edge)
  for (std::size_t e = 0; e < edges.size(); ++e) {
    auto [i, j] = edges[e];
    adj[i].emplace_back(j, static_cast<int>(e));
    adj[j].emplace_back(i, static_cast<int>(e));
  }

  TreeOrder order;
  order.parent.assign(num_nodes, -1);
  order.parent_edge.assign(num_nodes, -1);
  order.visit_order.reserve(num_nodes);

  std::vector<bool> visited(num_nodes, false);
  std::vector<int> bfs;
  bfs.reserve(num_nodes);
  for (int root = 0; root < num_nodes; ++root) {
    if (visited[root]) continue;
    order.roots.push_back(root);
    visited[root] = true;
    bfs.clear();
    bfs.push_back(root);
    for (std::size_t head = 0; head < bfs.size(); ++head) {
      int u = bfs[head];
      for (auto [v, e] : adj[u]) {
        if (v == order.parent[u]) continue;
        if (visited[v])
          throw InvalidInput("edge set has a cycle through node " +
                             std::to_string(v));
        visited[v] = true;
        order.parent[v] = u;
        order.parent_edge[v] = e;
        bfs.push_back(v);
      }
    }
    // parents were discovered first, so the reverse lists children first
    order.visit_order.insert(order.visit_order.end(), bfs.rbegin(),
                             bfs.rend());
  }
  return order;
}

TreeOrder build_tree_order(const MrfModel& model) {
  return build_tree_order(model.num_nodes(), model.edges());
}

TreeMapResult tree_map(const MrfModel& model, const TreeOrder& order) {
  const int n = model.num_nodes();
  std::vector<Vector> belief(n);
  for (int i = 0; i < n; ++i) belief[i] = model.unary(i);

  // backptr[u][t] = minimizing label of u when its parent takes label t
  std::vector<Eigen::VectorXi> backptr(n);

  for (int u : order.visit_order) {
    const int p = order.parent[u];
    if (p < 0) continue;
    const int e = order.parent_edge[u];
    const Matrix& table = model.pairwise(e);
    const bool u_on_rows = model.edge(e).first == u;
    const int lp = model.cardinality(p);

    Vector msg(lp);
    Eigen::VectorXi arg(lp);
    Vector scratch;
    for (int t = 0; t < lp; ++t) {
      if (u_on_rows)
        scratch = table.col(t) + belief[u];
      else
        scratch = table.row(t).transpose() + belief[u];
      Eigen::Index best;
      msg[t] = scratch.minCoeff(&best);  // first minimum = smallest label
      arg[t] = static_cast<int>(best);
    }
    msg.array() -= msg.minCoeff();  // normalization; argmins unchanged
    belief[p] += msg;
    backptr[u] = std::move(arg);
  }

  Labeling x(n);
  for (auto it = order.visit_order.rbegin(); it != order.visit_order.rend();
       ++it) {
    const int u = *it;
    const int p = order.parent[u];
    if (p < 0) {
      Eigen::Index best;
      belief[u].minCoeff(&best);
      x[u] = static_cast<int>(best);
    } else {
      x[u] = backptr[u][x[p]];
    }
  }
  return {x, energy(model, x)};
}

TreeMapResult tree_map(const MrfModel& model) {
  return tree_map(model, build_tree_order(model));
}

double tree_map_value(const MrfModel& model) { return tree_map(model).value; }

}  // namespace mbest
