#include "mbest/bench.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <ostream>
#include <random>

#include "mbest/model_io.hpp"
#include "mbest/treebp.hpp"

namespace mbest::bench {
namespace {

double cpu_seconds_now() {
  return static_cast<double>(std::clock()) / CLOCKS_PER_SEC;
}

// Uniform random spanning tree by a random walk on the complete graph,
// keeping the first-entry edge of every node.
std::vector<Edge> random_walk_tree(int n, std::mt19937_64& rng) {
  std::vector<Edge> edges;
  if (n <= 1) return edges;
  std::vector<bool> visited(n, false);
  std::uniform_int_distribution<int> node(0, n - 1);
  int current = node(rng);
  visited[current] = true;
  int remaining = n - 1;
  while (remaining > 0) {
    int next = node(rng);
    while (next == current) next = node(rng);
    if (!visited[next]) {
      visited[next] = true;
      --remaining;
      edges.push_back({std::min(current, next), std::max(current, next)});
    }
    current = next;
  }
  return edges;
}

std::vector<Edge> grid_edges(int side) {
  std::vector<Edge> edges;
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) {
      const int id = r * side + c;
      if (c + 1 < side) edges.push_back({id, id + 1});
      if (r + 1 < side) edges.push_back({id, id + side});
    }
  return edges;
}

MrfModel gaussian_model(const std::vector<int>& cards,
                        const std::vector<Edge>& edges, std::mt19937_64& rng,
                        bool submodularize) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Vector> unary;
  unary.reserve(cards.size());
  for (int c : cards) {
    Vector u(c);
    for (int s = 0; s < c; ++s) u[s] = gauss(rng);
    unary.push_back(std::move(u));
  }
  std::vector<Matrix> pairwise;
  pairwise.reserve(edges.size());
  std::uniform_real_distribution<double> margin(
      std::nextafter(0.0, 1.0), 0.1);  // (0, 0.1]
  for (const auto& [i, j] : edges) {
    Matrix t(cards[i], cards[j]);
    for (int s = 0; s < t.rows(); ++s)
      for (int u = 0; u < t.cols(); ++u) t(s, u) = gauss(rng);
    if (submodularize) {
      // repair theta(0,0) + theta(1,1) <= theta(0,1) + theta(1,0), keeping
      // the other entries Gaussian
      const double violation = t(0, 0) + t(1, 1) - t(0, 1) - t(1, 0);
      if (violation > 0.0) t(0, 1) += violation + margin(rng);
    }
    pairwise.push_back(std::move(t));
  }
  return MrfModel(cards, edges, std::move(unary), std::move(pairwise));
}

}  // namespace

std::string family_name(Family family) {
  switch (family) {
    case Family::kRandomTree:
      return "random-tree";
    case Family::kGridSubmodular2Label:
      return "grid-submodular-2label";
    case Family::kGridGeneral4Label:
      return "grid-general-4label";
  }
  return "unknown";
}

std::optional<Family> parse_family(const std::string& name) {
  if (name == "random-tree") return Family::kRandomTree;
  if (name == "grid-submodular-2label") return Family::kGridSubmodular2Label;
  if (name == "grid-general-4label") return Family::kGridGeneral4Label;
  return std::nullopt;
}

MrfModel generate(const GeneratorSpec& spec) {
  if (spec.n < 1) throw InvalidInput("generator needs n >= 1");
  std::mt19937_64 rng(spec.seed);

  if (spec.family == Family::kRandomTree) {
    const int labels = spec.labels > 0 ? spec.labels : 4;
    std::vector<int> cards(spec.n, labels);
    return gaussian_model(cards, random_walk_tree(spec.n, rng), rng, false);
  }

  const int side = static_cast<int>(std::lround(std::sqrt(spec.n)));
  if (side * side != spec.n)
    throw InvalidInput("grid families need a square node count, got " +
                       std::to_string(spec.n));
  const bool submodular = spec.family == Family::kGridSubmodular2Label;
  const int labels = submodular ? 2 : 4;
  if (spec.labels > 0 && spec.labels != labels)
    throw InvalidInput(family_name(spec.family) + " fixes the label count at " +
                       std::to_string(labels));
  std::vector<int> cards(spec.n, labels);
  return gaussian_model(cards, grid_edges(side), rng, submodular);
}

std::vector<ExperimentRow> run_experiment(const GeneratorSpec& spec,
                                          int num_solutions,
                                          const ExperimentConfig& config) {
  const MrfModel model = generate(spec);
  std::optional<oracle::MBestList> truth;
  if (config.with_oracle &&
      oracle::labeling_space_size(model, config.oracle_cap) >= 0)
    truth = oracle::brute_force_mbest(model, num_solutions, config.oracle_cap);

  const bool acyclic = model.is_forest();
  std::vector<ExperimentRow> rows;
  std::vector<Labeling> previous;
  for (int m = 1; m <= num_solutions; ++m) {
    ExperimentRow row;
    row.family = family_name(spec.family);
    row.n = spec.n;
    row.seed = spec.seed;
    row.m = m;

    const double start = cpu_seconds_now();
    StepResult step;
    if (m == 1 && acyclic) {
      const TreeMapResult map = tree_map(model);
      step = {map.labeling, map.value, map.value, true, SolveTrace{}};
    } else if (acyclic) {
      step = solve_tree_mbest_step(model, previous, config.solve);
    } else {
      step = solve_general_mbest_step(model, previous, config.solve);
    }
    row.cpu_seconds = cpu_seconds_now() - start;

    row.solver_energy = step.energy;
    row.dual_bound = step.dual_bound;
    row.gap = step.energy - step.dual_bound;
    if (!step.trace.records.empty()) {
      row.outer_rounds = step.trace.records.back().outer_round + 1;
      row.inner_iters_total = static_cast<int>(step.trace.records.size());
    }
    if (truth && m <= static_cast<int>(truth->size()))
      row.oracle_energy = (*truth)[m - 1].energy;

    previous.push_back(step.labeling);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_report_csv(std::ostream& out,
                      const std::vector<ExperimentRow>& rows) {
  out << "family,n,seed,m,solver_energy,oracle_energy_or_empty,dual_bound,"
         "gap,outer_rounds,inner_iters_total,cpu_seconds\n";
  for (const auto& r : rows) {
    out << r.family << "," << r.n << "," << r.seed << "," << r.m << ","
        << format_double(r.solver_energy) << ",";
    if (r.oracle_energy) out << format_double(*r.oracle_energy);
    out << "," << format_double(r.dual_bound) << "," << format_double(r.gap)
        << "," << r.outer_rounds << "," << r.inner_iters_total << ",";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", r.cpu_seconds);
    out << buf << "\n";
  }
}

}  // namespace mbest::bench
