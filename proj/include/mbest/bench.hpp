#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mbest/model.hpp"
#include "mbest/oracle.hpp"
#include "mbest/solver.hpp"

namespace mbest::bench {

enum class Family {
  kRandomTree,          // uniform random spanning tree, Gaussian energies
  kGridSubmodular2Label,  // sqrt(n) x sqrt(n) grid, 2 labels, submodular edges
  kGridGeneral4Label,     // sqrt(n) x sqrt(n) grid, 4 labels, unrestricted
};

std::string family_name(Family family);
std::optional<Family> parse_family(const std::string& name);

struct GeneratorSpec {
  Family family = Family::kRandomTree;
  int n = 1;
  std::uint64_t seed = 0;
  /// Label count for families that leave it free (random-tree, default 4);
  /// the grid families carry their count in the name and reject overrides.
  int labels = 0;
};

/// Seeded instance generation; identical specs produce identical models.
MrfModel generate(const GeneratorSpec& spec);

struct ExperimentRow {
  std::string family;
  int n = 0;
  std::uint64_t seed = 0;
  int m = 0;
  double solver_energy = 0.0;
  std::optional<double> oracle_energy;
  double dual_bound = 0.0;
  double gap = 0.0;  // solver_energy - dual_bound
  int outer_rounds = 0;
  int inner_iters_total = 0;
  double cpu_seconds = 0.0;
};

struct ExperimentConfig {
  SolveConfig solve;
  bool with_oracle = true;  // skipped automatically above the cap
  std::int64_t oracle_cap = oracle::kDefaultEnumerationCap;
};

/// Generates the instance, solves the M-best sequence with per-step CPU
/// timing, and lines solver energies up against brute-force truth when the
/// labeling space is small enough. Budget exhaustion inside a step
/// propagates as BudgetExhausted.
std::vector<ExperimentRow> run_experiment(const GeneratorSpec& spec,
                                          int num_solutions,
                                          const ExperimentConfig& config = {});

/// CSV schema: family,n,seed,m,solver_energy,oracle_energy_or_empty,
/// dual_bound,gap,outer_rounds,inner_iters_total,cpu_seconds.
void write_report_csv(std::ostream& out,
                      const std::vector<ExperimentRow>& rows);

}  // namespace mbest::bench
