#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mbest {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Per-node label assignment; entry i lies in [0, cardinality(i)).
using Labeling = Eigen::VectorXi;

/// Unordered node pair, stored canonically as (min, max).
using Edge = std::pair<int, int>;

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

bool labelings_equal(const Labeling& a, const Labeling& b);
bool labeling_less(const Labeling& a, const Labeling& b);  // lexicographic

/// Pairwise MRF over an undirected graph: per-node unary energy vectors and
/// per-edge energy tables. Edges are canonicalized to (min, max) on
/// construction and each table's rows are indexed by the smaller endpoint.
/// Instances are immutable after construction and safe to share across
/// concurrent readers.
class MrfModel {
 public:
  /// `edges` and `pairwise` must be aligned; a pair given as (j, i) with
  /// j > i is accepted and its table is transposed into canonical form.
  /// Throws InvalidInput on malformed topology, shape mismatches, or
  /// non-finite energies.
  MrfModel(std::vector<int> cardinalities, std::vector<Edge> edges,
           std::vector<Vector> unary, std::vector<Matrix> pairwise);

  int num_nodes() const { return static_cast<int>(cards_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int cardinality(int node) const { return cards_[node]; }
  int max_cardinality() const;
  const std::vector<int>& cardinalities() const { return cards_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[e]; }
  const Vector& unary(int node) const { return unary_[node]; }
  const Matrix& pairwise(int e) const { return pairwise_[e]; }

  /// Index of edge {i, j} in edges(), orientation-insensitive; -1 if absent.
  int edge_index(int i, int j) const;

  std::vector<int> node_degrees() const;
  bool is_forest() const;     // acyclic
  bool is_connected() const;  // single component (true for num_nodes == 1)

  bool is_valid_labeling(const Labeling& x) const;
  void require_valid_labeling(const Labeling& x) const;  // throws InvalidInput

 private:
  std::vector<int> cards_;
  std::vector<Edge> edges_;
  std::vector<Vector> unary_;
  std::vector<Matrix> pairwise_;
  std::unordered_map<std::int64_t, int> edge_lookup_;
};

/// Exact (bitwise) equality of topology and tables.
bool operator==(const MrfModel& a, const MrfModel& b);

/// Total energy of an integer labeling: sum of unary terms plus pairwise
/// terms in edge order. Throws InvalidInput if x does not fit the model.
double energy(const MrfModel& model, const Labeling& x);

/// Relaxed node/edge marginals. Construction does not enforce the local
/// polytope constraints (running averages of subproblem minimizers are kept
/// in this form and need not be edge-consistent); use in_local_polytope to
/// check them.
struct FractionalPrimal {
  std::vector<Vector> node_marginals;  // [i], length cardinality(i)
  std::vector<Matrix> edge_marginals;  // [e], canonical orientation

  static FractionalPrimal zero(const MrfModel& model);
  /// Indicator view of an integer labeling.
  static FractionalPrimal indicator(const MrfModel& model, const Labeling& x);
};

/// Energy of a fractional point: sum over nodes and edges of <theta, mu>.
double energy(const MrfModel& model, const FractionalPrimal& mu);

/// Normalization, nonnegativity, range and edge-marginalization checks.
bool in_local_polytope(const MrfModel& model, const FractionalPrimal& mu,
                       double tol = 1e-9);

}  // namespace mbest
