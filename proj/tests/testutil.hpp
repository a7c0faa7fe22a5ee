#pragma once

// Seeded instance builders shared by the test binaries.

#include <algorithm>
#include <random>
#include <vector>

#include "mbest/model.hpp"

namespace testutil {

using mbest::Edge;
using mbest::Labeling;
using mbest::Matrix;
using mbest::MrfModel;
using mbest::Vector;

inline std::vector<int> random_cardinalities(std::mt19937_64& rng, int n,
                                             int max_labels) {
  std::uniform_int_distribution<int> card(1, max_labels);
  std::vector<int> cards(n);
  for (int& c : cards) c = card(rng);
  return cards;
}

// Random tree topology: node i attaches to a uniformly chosen earlier node.
inline std::vector<Edge> random_tree_edges(std::mt19937_64& rng, int n) {
  std::vector<Edge> edges;
  for (int i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> pick(0, i - 1);
    edges.push_back({pick(rng), i});
  }
  return edges;
}

// Random tree plus extra edges with the given probability; stays connected.
inline std::vector<Edge> random_connected_edges(std::mt19937_64& rng, int n,
                                                double extra_prob) {
  std::vector<Edge> edges = random_tree_edges(rng, n);
  std::bernoulli_distribution extra(extra_prob);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (std::find(edges.begin(), edges.end(), Edge{i, j}) != edges.end())
        continue;
      if (extra(rng)) edges.push_back({i, j});
    }
  return edges;
}

inline MrfModel gaussian_model(std::mt19937_64& rng, std::vector<int> cards,
                               std::vector<Edge> edges) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Vector> unary;
  for (int c : cards) {
    Vector u(c);
    for (int s = 0; s < c; ++s) u[s] = gauss(rng);
    unary.push_back(std::move(u));
  }
  std::vector<Matrix> pairwise;
  for (const auto& [i, j] : edges) {
    Matrix t(cards[i], cards[j]);
    for (int s = 0; s < t.rows(); ++s)
      for (int u = 0; u < t.cols(); ++u) t(s, u) = gauss(rng);
    pairwise.push_back(std::move(t));
  }
  return MrfModel(std::move(cards), std::move(edges), std::move(unary),
                  std::move(pairwise));
}

inline MrfModel random_tree_model(std::mt19937_64& rng, int n,
                                  int max_labels) {
  return gaussian_model(rng, random_cardinalities(rng, n, max_labels),
                        random_tree_edges(rng, n));
}

inline MrfModel random_connected_model(std::mt19937_64& rng, int n,
                                       int max_labels, double extra_prob) {
  return gaussian_model(rng, random_cardinalities(rng, n, max_labels),
                        random_connected_edges(rng, n, extra_prob));
}

inline Labeling random_labeling(std::mt19937_64& rng, const MrfModel& model) {
  Labeling x(model.num_nodes());
  for (int i = 0; i < model.num_nodes(); ++i) {
    std::uniform_int_distribution<int> label(0, model.cardinality(i) - 1);
    x[i] = label(rng);
  }
  return x;
}

// Independent table-summing energy evaluation (kept apart from the library's
// energy() on purpose: it pulls the tables out entry by entry).
inline double table_sum_energy(const MrfModel& model, const Labeling& x) {
  double total = 0.0;
  for (int i = 0; i < model.num_nodes(); ++i) {
    const Vector& u = model.unary(i);
    total += u[x[i]];
  }
  for (int e = 0; e < model.num_edges(); ++e) {
    const int i = model.edge(e).first;
    const int j = model.edge(e).second;
    total += model.pairwise(e)(x[i], x[j]);
  }
  return total;
}

// Simple fixtures from the documentation examples.

// 2-node chain: theta_1 = [0, 1], theta_2 = [0, 1], theta_12 = [[0,5],[5,0]].
inline MrfModel two_node_chain() {
  std::vector<Vector> unary(2, Vector(2));
  unary[0] << 0, 1;
  unary[1] << 0, 1;
  Matrix t(2, 2);
  t << 0, 5, 5, 0;
  return MrfModel({2, 2}, {{0, 1}}, std::move(unary), {t});
}

inline Labeling make_labeling(std::initializer_list<int> labels) {
  Labeling x(static_cast<int>(labels.size()));
  int i = 0;
  for (int v : labels) x[i++] = v;
  return x;
}

// Every labeling in odometer order; only for tiny models.
inline std::vector<Labeling> all_labelings(const MrfModel& model) {
  std::vector<Labeling> out;
  Labeling x = Labeling::Zero(model.num_nodes());
  while (true) {
    out.push_back(x);
    int pos = model.num_nodes() - 1;
    while (pos >= 0 && x[pos] + 1 == model.cardinality(pos)) {
      x[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++x[pos];
  }
  return out;
}

}  // namespace testutil
