#include "mbest/oracle.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <string>

namespace mbest::oracle {
namespace {

// Local energy evaluation: unary terms in node order, then pairwise terms in
// edge order, matching the documented summation order without sharing code.
double eval_energy(const MrfModel& model, const Labeling& x) {
  double total = 0.0;
  for (int i = 0; i < model.num_nodes(); ++i) total += model.unary(i)[x[i]];
  for (int e = 0; e < model.num_edges(); ++e) {
    const auto& [i, j] = model.edge(e);
    total += model.pairwise(e)(x[i], x[j]);
  }
  return total;
}

// Odometer-style visit of every labeling.
template <typename Fn>
void for_each_labeling(const MrfModel& model, Fn&& fn) {
  const int n = model.num_nodes();
  Labeling x = Labeling::Zero(n);
  while (true) {
    fn(x);
    int pos = n - 1;
    while (pos >= 0 && x[pos] + 1 == model.cardinality(pos)) {
      x[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++x[pos];
  }
}

std::int64_t require_enumerable(const MrfModel& model, std::int64_t cap,
                                const std::string& what) {
  const std::int64_t size = labeling_space_size(model, cap);
  if (size < 0) {
    long double required = 1.0L;
    for (int c : model.cardinalities()) required *= c;
    throw InvalidInput(what + " needs " + std::to_string((double)required) +
                       " labelings, above the cap of " + std::to_string(cap));
  }
  return size;
}

bool ranked_less(const RankedLabeling& a, const RankedLabeling& b) {
  if (a.energy != b.energy) return a.energy < b.energy;
  return labeling_less(a.labeling, b.labeling);
}

int count_components(int num_nodes, const std::vector<Edge>& edges,
                     const std::vector<bool>& mask) {
  std::vector<int> parent(num_nodes);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  int components = num_nodes;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!mask[e]) continue;
    int a = find(edges[e].first), b = find(edges[e].second);
    if (a != b) {
      parent[b] = a;
      --components;
    }
  }
  return components;
}

void enumerate_trees_rec(int num_nodes, const std::vector<Edge>& edges,
                         std::size_t next, std::vector<int>& chosen,
                         std::vector<int> parent,
                         std::vector<SpanningTree>& out) {
  if (static_cast<int>(chosen.size()) == num_nodes - 1) {
    std::vector<Edge> tree_edges;
    tree_edges.reserve(chosen.size());
    for (int e : chosen) tree_edges.push_back(edges[e]);
    out.push_back(make_spanning_tree(num_nodes, std::move(tree_edges)));
    return;
  }
  const int missing = num_nodes - 1 - static_cast<int>(chosen.size());
  if (static_cast<int>(edges.size() - next) < missing) return;

  auto find = [&parent](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  // include edges[next] unless it closes a cycle
  const int ra = find(edges[next].first), rb = find(edges[next].second);
  if (ra != rb) {
    std::vector<int> merged = parent;
    merged[rb] = ra;
    chosen.push_back(static_cast<int>(next));
    enumerate_trees_rec(num_nodes, edges, next + 1, chosen, std::move(merged),
                        out);
    chosen.pop_back();
  }
  // exclude edges[next] if the remaining edges can still connect everything
  std::vector<bool> mask(edges.size(), false);
  for (int e : chosen) mask[e] = true;
  for (std::size_t e = next + 1; e < edges.size(); ++e) mask[e] = true;
  if (count_components(num_nodes, edges, mask) == 1)
    enumerate_trees_rec(num_nodes, edges, next + 1, chosen, std::move(parent),
                        out);
}

}  // namespace

std::int64_t labeling_space_size(const MrfModel& model, std::int64_t cap) {
  std::int64_t size = 1;
  for (int c : model.cardinalities()) {
    if (size > cap / c) return -1;
    size *= c;
  }
  return size <= cap ? size : -1;
}

MBestList brute_force_mbest(const MrfModel& model, int count,
                            std::int64_t cap) {
  if (count < 1) throw InvalidInput("requested solution count must be >= 1");
  require_enumerable(model, cap, "brute-force enumeration");

  // max-heap on (energy, labeling); keeps the `count` smallest seen so far
  auto worse = [](const RankedLabeling& a, const RankedLabeling& b) {
    return ranked_less(a, b);
  };
  std::priority_queue<RankedLabeling, std::vector<RankedLabeling>,
                      decltype(worse)>
      heap(worse);
  for_each_labeling(model, [&](const Labeling& x) {
    RankedLabeling entry{x, eval_energy(model, x)};
    if (static_cast<int>(heap.size()) < count) {
      heap.push(std::move(entry));
    } else if (ranked_less(entry, heap.top())) {
      heap.pop();
      heap.push(std::move(entry));
    }
  });

  MBestList list(heap.size());
  for (auto it = list.rbegin(); it != list.rend(); ++it) {
    *it = heap.top();
    heap.pop();
  }
  return list;
}

std::vector<SpanningTree> enumerate_spanning_trees(
    int num_nodes, const std::vector<Edge>& edges, int max_nodes) {
  if (num_nodes > max_nodes)
    throw InvalidInput("spanning-tree enumeration capped at " +
                       std::to_string(max_nodes) + " nodes, got " +
                       std::to_string(num_nodes));
  if (num_nodes == 1) return {make_spanning_tree(1, {})};

  std::vector<Edge> canon = edges;
  for (auto& [i, j] : canon)
    if (i > j) std::swap(i, j);

  std::vector<bool> all(canon.size(), true);
  if (count_components(num_nodes, canon, all) != 1)
    throw InvalidInput("graph is disconnected: no spanning tree exists");

  std::vector<SpanningTree> out;
  std::vector<int> chosen;
  std::vector<int> parent(num_nodes);
  std::iota(parent.begin(), parent.end(), 0);
  enumerate_trees_rec(num_nodes, canon, 0, chosen, std::move(parent), out);
  return out;
}

double brute_force_lagrangian(const MrfModel& tree_model,
                              const std::vector<Labeling>& previous,
                              const Vector& lambda, std::int64_t cap) {
  const int n = tree_model.num_nodes();
  if (tree_model.num_edges() != n - 1)
    throw InvalidInput("Lagrangian oracle expects a tree model");
  std::vector<bool> all(tree_model.num_edges(), true);
  if (n > 1 && count_components(n, tree_model.edges(), all) != 1)
    throw InvalidInput("Lagrangian oracle expects a connected tree");
  if (lambda.size() != static_cast<Eigen::Index>(previous.size()))
    throw InvalidInput("one multiplier per previous solution required");
  for (const auto& xm : previous) tree_model.require_valid_labeling(xm);
  require_enumerable(tree_model, cap, "Lagrangian enumeration");

  const std::vector<int> degrees = tree_model.node_degrees();
  double best = std::numeric_limits<double>::infinity();
  for_each_labeling(tree_model, [&](const Labeling& x) {
    double value = eval_energy(tree_model, x);
    for (std::size_t m = 0; m < previous.size(); ++m) {
      const Labeling& xm = previous[m];
      double inequality = 0.0;
      for (int i = 0; i < n; ++i)
        if (x[i] == xm[i]) inequality += 1.0 - degrees[i];
      for (const auto& [i, j] : tree_model.edges())
        if (x[i] == xm[i] && x[j] == xm[j]) inequality += 1.0;
      value += lambda[m] * inequality;
    }
    best = std::min(best, value);
  });
  return best;
}

}  // namespace mbest::oracle
