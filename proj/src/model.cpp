#include "mbest/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mbest {
namespace {

// Union-find over node ids; used for the forest/connectivity queries.
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

std::int64_t edge_key(int i, int j, int n) {
  return static_cast<std::int64_t>(i) * n + j;
}

}  // namespace

bool labelings_equal(const Labeling& a, const Labeling& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

bool labeling_less(const Labeling& a, const Labeling& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

MrfModel::MrfModel(std::vector<int> cardinalities, std::vector<Edge> edges,
                   std::vector<Vector> unary, std::vector<Matrix> pairwise)
    : cards_(std::move(cardinalities)),
      edges_(std::move(edges)),
      unary_(std::move(unary)),
      pairwise_(std::move(pairwise)) {
  const int n = num_nodes();
  if (n <= 0) throw InvalidInput("model must have at least one node");
  for (int i = 0; i < n; ++i) {
    if (cards_[i] < 1)
      throw InvalidInput("node " + std::to_string(i) +
                         " has cardinality " + std::to_string(cards_[i]));
  }
  if (static_cast<int>(unary_.size()) != n)
    throw InvalidInput("expected one unary table per node");
  for (int i = 0; i < n; ++i) {
    if (unary_[i].size() != cards_[i])
      throw InvalidInput("unary table for node " + std::to_string(i) +
                         " has " + std::to_string(unary_[i].size()) +
                         " entries, expected " + std::to_string(cards_[i]));
    if (!unary_[i].allFinite())
      throw InvalidInput("non-finite unary energy at node " +
                         std::to_string(i));
  }
  if (pairwise_.size() != edges_.size())
    throw InvalidInput("expected one pairwise table per edge");
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    auto [i, j] = edges_[e];
    if (i < 0 || i >= n || j < 0 || j >= n)
      throw InvalidInput("edge (" + std::to_string(i) + ", " +
                         std::to_string(j) + ") references an invalid node");
    if (i == j)
      throw InvalidInput("self-loop at node " + std::to_string(i));
    if (i > j) {  // canonicalize: rows of the table follow the smaller id
      std::swap(i, j);
      edges_[e] = {i, j};
      pairwise_[e] = pairwise_[e].transpose().eval();
    }
    if (pairwise_[e].rows() != cards_[i] || pairwise_[e].cols() != cards_[j])
      throw InvalidInput("pairwise table for edge (" + std::to_string(i) +
                         ", " + std::to_string(j) + ") has shape " +
                         std::to_string(pairwise_[e].rows()) + "x" +
                         std::to_string(pairwise_[e].cols()) + ", expected " +
                         std::to_string(cards_[i]) + "x" +
                         std::to_string(cards_[j]));
    if (!pairwise_[e].allFinite())
      throw InvalidInput("non-finite pairwise energy on edge (" +
                         std::to_string(i) + ", " + std::to_string(j) + ")");
    if (!edge_lookup_.emplace(edge_key(i, j, n), static_cast<int>(e)).second)
      throw InvalidInput("duplicate edge (" + std::to_string(i) + ", " +
                         std::to_string(j) + ")");
  }
}

int MrfModel::max_cardinality() const {
  return *std::max_element(cards_.begin(), cards_.end());
}

int MrfModel::edge_index(int i, int j) const {
  if (i > j) std::swap(i, j);
  auto it = edge_lookup_.find(edge_key(i, j, num_nodes()));
  return it == edge_lookup_.end() ? -1 : it->second;
}

std::vector<int> MrfModel::node_degrees() const {
  std::vector<int> deg(num_nodes(), 0);
  for (const auto& [i, j] : edges_) {
    ++deg[i];
    ++deg[j];
  }
  return deg;
}

bool MrfModel::is_forest() const {
  DisjointSets sets(num_nodes());
  for (const auto& [i, j] : edges_)
    if (!sets.unite(i, j)) return false;
  return true;
}

bool MrfModel::is_connected() const {
  DisjointSets sets(num_nodes());
  int components = num_nodes();
  for (const auto& [i, j] : edges_)
    if (sets.unite(i, j)) --components;
  return components == 1;
}

bool MrfModel::is_valid_labeling(const Labeling& x) const {
  if (x.size() != num_nodes()) return false;
  for (int i = 0; i < num_nodes(); ++i)
    if (x[i] < 0 || x[i] >= cards_[i]) return false;
  return true;
}

void MrfModel::require_valid_labeling(const Labeling& x) const {
  if (x.size() != num_nodes())
    throw InvalidInput("labeling has " + std::to_string(x.size()) +
                       " entries, model has " + std::to_string(num_nodes()) +
                       " nodes");
  for (int i = 0; i < num_nodes(); ++i)
    if (x[i] < 0 || x[i] >= cards_[i])
      throw InvalidInput("label " + std::to_string(x[i]) + " at node " +
                         std::to_string(i) + " outside cardinality " +
                         std::to_string(cards_[i]));
}

bool operator==(const MrfModel& a, const MrfModel& b) {
  if (a.cardinalities() != b.cardinalities() || a.edges() != b.edges())
    return false;
  for (int i = 0; i < a.num_nodes(); ++i)
    if (a.unary(i) != b.unary(i)) return false;
  for (int e = 0; e < a.num_edges(); ++e)
    if (a.pairwise(e) != b.pairwise(e)) return false;
  return true;
}

double energy(const MrfModel& model, const Labeling& x) {
  model.require_valid_labeling(x);
  double total = 0.0;
  for (int i = 0; i < model.num_nodes(); ++i) total += model.unary(i)[x[i]];
  for (int e = 0; e < model.num_edges(); ++e) {
    const auto& [i, j] = model.edge(e);
    total += model.pairwise(e)(x[i], x[j]);
  }
  return total;
}

FractionalPrimal FractionalPrimal::zero(const MrfModel& model) {
  FractionalPrimal mu;
  mu.node_marginals.reserve(model.num_nodes());
  for (int i = 0; i < model.num_nodes(); ++i)
    mu.node_marginals.push_back(Vector::Zero(model.cardinality(i)));
  mu.edge_marginals.reserve(model.num_edges());
  for (int e = 0; e < model.num_edges(); ++e) {
    const auto& [i, j] = model.edge(e);
    mu.edge_marginals.push_back(
        Matrix::Zero(model.cardinality(i), model.cardinality(j)));
  }
  return mu;
}

FractionalPrimal FractionalPrimal::indicator(const MrfModel& model,
                                             const Labeling& x) {
  model.require_valid_labeling(x);
  FractionalPrimal mu = zero(model);
  for (int i = 0; i < model.num_nodes(); ++i) mu.node_marginals[i][x[i]] = 1.0;
  for (int e = 0; e < model.num_edges(); ++e) {
    const auto& [i, j] = model.edge(e);
    mu.edge_marginals[e](x[i], x[j]) = 1.0;
  }
  return mu;
}

double energy(const MrfModel& model, const FractionalPrimal& mu) {
  if (static_cast<int>(mu.node_marginals.size()) != model.num_nodes() ||
      static_cast<int>(mu.edge_marginals.size()) != model.num_edges())
    throw InvalidInput("fractional primal does not match the model");
  double total = 0.0;
  for (int i = 0; i < model.num_nodes(); ++i)
    total += model.unary(i).dot(mu.node_marginals[i]);
  for (int e = 0; e < model.num_edges(); ++e)
    total += model.pairwise(e).cwiseProduct(mu.edge_marginals[e]).sum();
  return total;
}

bool in_local_polytope(const MrfModel& model, const FractionalPrimal& mu,
                       double tol) {
  if (static_cast<int>(mu.node_marginals.size()) != model.num_nodes() ||
      static_cast<int>(mu.edge_marginals.size()) != model.num_edges())
    return false;
  for (int i = 0; i < model.num_nodes(); ++i) {
    const Vector& m = mu.node_marginals[i];
    if (m.size() != model.cardinality(i)) return false;
    if (m.minCoeff() < -tol || m.maxCoeff() > 1.0 + tol) return false;
    if (std::abs(m.sum() - 1.0) > tol) return false;
  }
  for (int e = 0; e < model.num_edges(); ++e) {
    const auto& [i, j] = model.edge(e);
    const Matrix& m = mu.edge_marginals[e];
    if (m.rows() != model.cardinality(i) || m.cols() != model.cardinality(j))
      return false;
    if (m.minCoeff() < -tol || m.maxCoeff() > 1.0 + tol) return false;
    // rows marginalize to node i, columns to node j
    if (((m.rowwise().sum() - mu.node_marginals[i]).cwiseAbs().maxCoeff() >
         tol) ||
        ((m.colwise().sum().transpose() - mu.node_marginals[j])
             .cwiseAbs()
             .maxCoeff() > tol))
      return false;
  }
  return true;
}

}  // namespace mbest
