#pragma once

#include <cstdint>
#include <vector>

#include "mbest/model.hpp"
#include "mbest/stcover.hpp"

// Exhaustive ground-truth routines for tests and acceptance checks. They
// deliberately share no algorithmic code with the solver modules: energies,
// inequality values and connectivity are re-derived locally so that
// agreement with the solvers is meaningful evidence.
namespace mbest::oracle {

inline constexpr std::int64_t kDefaultEnumerationCap = std::int64_t{1} << 24;

/// Number of joint labelings, or -1 when the product exceeds the cap.
std::int64_t labeling_space_size(const MrfModel& model, std::int64_t cap);

struct RankedLabeling {
  Labeling labeling;
  double energy = 0.0;
};

/// Labelings in non-decreasing energy order, ties broken lexicographically.
using MBestList = std::vector<RankedLabeling>;

/// Enumerates every labeling and returns the first `count` under the
/// (energy, labeling) order. Throws InvalidInput when the labeling space
/// exceeds the cap, reporting the required enumeration size.
MBestList brute_force_mbest(const MrfModel& model, int count,
                            std::int64_t cap = kDefaultEnumerationCap);

/// Every spanning tree of the graph, by recursive edge inclusion/exclusion
/// with connectivity pruning. Refuses graphs with more than max_nodes nodes.
std::vector<SpanningTree> enumerate_spanning_trees(
    int num_nodes, const std::vector<Edge>& edges, int max_nodes = 8);

/// min over all labelings x of energy(x) + sum_m lambda_m I(x, x^m), with I
/// evaluated on the tree model's own edge set. Valid on trees, where the
/// relaxed problem attains its optimum at integer points.
double brute_force_lagrangian(const MrfModel& tree_model,
                              const std::vector<Labeling>& previous,
                              const Vector& lambda,
                              std::int64_t cap = kDefaultEnumerationCap);

}  // namespace mbest::oracle
