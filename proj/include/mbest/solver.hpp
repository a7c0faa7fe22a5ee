#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mbest/model.hpp"
#include "mbest/stcover.hpp"
#include "mbest/treebp.hpp"

namespace mbest {

class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct SolveConfig {
  double tolerance = 1e-6;       // primal-dual gap that certifies optimality
  int outer_rounds = 200;        // constraint-management rounds
  int inner_iterations = 20;     // primal/dual iterations per round
  double dual_stall_tolerance = 1e-9;  // round-to-round improvement floor
};

struct TraceRecord {
  int outer_round = 0;
  int t = 0;
  double dual_value = 0.0;
  double best_dual = 0.0;
  std::optional<double> best_primal;  // empty until a feasible primal exists
  int active_set_size = 0;
  double alpha = 0.0;
  int eta = 0;
};

struct SolveTrace {
  std::vector<TraceRecord> records;
};

/// CSV schema: outer_round,t,dual_value,best_dual,best_primal_energy_or_empty,
/// active_set_size,alpha,eta (one record per inner iteration).
void write_trace_csv(std::ostream& out, const SolveTrace& trace);

/// One solved exclusion step: the best feasible labeling found, its energy
/// under the unperturbed model, the best dual lower bound, and whether the
/// gap closed within tolerance.
struct StepResult {
  Labeling labeling;
  double energy = 0.0;
  double dual_bound = 0.0;
  bool certified = false;
  SolveTrace trace;
};

/// Thrown when the iteration budget runs out before any feasible primal
/// appears; carries the dual bound and the trace accumulated so far.
class BudgetExhausted : public std::runtime_error {
 public:
  BudgetExhausted(const std::string& msg, double bound, SolveTrace t)
      : std::runtime_error(msg), dual_bound(bound), trace(std::move(t)) {}

  double dual_bound;
  SolveTrace trace;
};

// ---------------------------------------------------------------------------
// Projections shared by both solvers.

/// Componentwise projection onto the positive orthant (exact, idempotent).
void project_nonnegative(Vector& v);

/// Consensus multipliers, one label vector per (subproblem, node).
using NodeDuals = std::vector<Vector>;

/// For every node and label, subtracts the mean across subproblems so the
/// values sum to zero there. All subproblems must carry all nodes.
void project_zero_mean(std::vector<NodeDuals>& delta);

/// Largest |sum over subproblems| across nodes and labels.
double zero_sum_residual(const std::vector<NodeDuals>& delta);

// ---------------------------------------------------------------------------
// Tree-structured models.

/// Energies absorbing the exclusion penalties into the tree:
///   theta~_i(s)    = theta_i(s)    + sum_m lambda_m (1 - d_i) [x^m_i = s]
///   theta~_ij(s,t) = theta_ij(s,t) + sum_m lambda_m [x^m_i = s][x^m_j = t]
/// with d_i the node degree in the tree. Evaluating the returned model at
/// any labeling x gives energy(model, x) + sum_m lambda_m I(x, x^m).
MrfModel perturbed_tree_potentials(const MrfModel& tree_model,
                                   const std::vector<Labeling>& previous,
                                   const Vector& lambda);

/// Projected supergradient ascent on the exclusion dual of a tree model:
/// each iteration runs min-sum BP on the perturbed potentials, reads off the
/// supergradient I(mu_hat, x^m) per excluded solution, and takes a step with
/// alpha_t = 1 / (eta_t + 1), eta_t counting dual decreases. Tracks the best
/// feasible integer primal (any minimizer differing from every previous
/// solution) and stops once the gap closes or the budget
/// (outer_rounds * inner_iterations) runs out.
StepResult solve_tree_mbest_step(const MrfModel& tree_model,
                                 const std::vector<Labeling>& previous,
                                 const SolveConfig& config = {});

// ---------------------------------------------------------------------------
// General (loopy) models.

/// Dynamic supergradient solver for one exclusion step on a connected model.
/// The dual decomposes over the spanning-tree cover plus one tree factor per
/// active exclusion inequality; a separation oracle (max-weight spanning
/// tree over the running-average primal) activates inequalities between
/// batches of inner iterations.
///
/// Consensus multipliers tie the subproblems together on every node and,
/// for subproblems sharing an edge, on the edge marginals as well. The edge
/// multipliers matter: an exclusion factor prices tree edges by indicator
/// terms that are not proportional to the energy tables, so coupling the
/// node marginals alone leaves the copies free to disagree on edges and the
/// decomposed dual tops out strictly below the relaxation optimum.
///
/// The individual blocks are public so they can be driven and inspected
/// directly; run() executes the full loop. Not safe for concurrent mutation.
class GeneralDualSolver {
 public:
  GeneralDualSolver(const MrfModel& model, std::vector<Labeling> previous,
                    SolveConfig config = {});

  struct Evaluation {
    double value = 0.0;             // dual value f(lambda, delta)
    std::vector<Labeling> argmins;  // per-subproblem minimizer
  };

  /// For each excluded solution, separates against the running-average
  /// primal estimate (all-zero before the first inner iteration) and
  /// inserts the max-weight spanning tree into the active set; re-inserting
  /// an identical tree is a no-op. Returns whether anything was added.
  bool constraint_management();

  /// Solves every tree subproblem with the current duals and returns the
  /// summed optima plus per-subproblem argmins. Throws InvalidState if the
  /// consensus duals violate the zero-sum constraint beyond 1e-9.
  Evaluation evaluate_expanded_lagrangian() const;

  /// Supergradient step: lambda gets the inequality values at the factor
  /// argmins (then clamps at zero), the node and edge consensus duals get
  /// the argmin indicators (then re-project to zero mean); advances eta
  /// and t.
  void dual_update(const Evaluation& eval);

  /// Folds one iteration's argmins into the running-average estimate.
  void accumulate_average(const std::vector<Labeling>& argmins);

  /// Cheapest labeling among this iteration's subproblem argmins that
  /// differs from every previous solution, if any.
  std::optional<std::pair<Labeling, double>> extract_primal_candidate(
      const std::vector<Labeling>& argmins) const;

  /// Full loop; throws BudgetExhausted if no feasible primal was ever seen.
  StepResult run();

  /// Replaces the consensus duals (e.g. to warm-start); shapes must match.
  /// Feasibility is checked at the next evaluation, not here.
  void set_delta(std::vector<NodeDuals> delta);

  // Observers.
  const TreeCover& cover() const { return cover_; }
  const SplitEnergies& split() const { return split_; }
  int num_subproblems() const { return static_cast<int>(subproblems_.size()); }
  int active_set_size() const {
    return num_subproblems() - static_cast<int>(cover_.trees.size());
  }
  const std::vector<NodeDuals>& delta() const { return delta_; }
  /// Edge consensus duals, [subproblem][k] aligned with its tree edges.
  const std::vector<std::vector<Matrix>>& edge_delta() const {
    return edge_delta_;
  }
  double lambda(int subproblem) const;
  const SpanningTree& subproblem_tree(int subproblem) const;
  FractionalPrimal average_primal() const;
  int eta() const { return eta_; }
  int iteration() const { return t_; }
  double last_alpha() const { return last_alpha_; }

 private:
  struct Subproblem {
    SpanningTree tree;
    std::vector<int> model_edge_ids;  // aligned with tree.edges
    TreeOrder order;
    int cover_index = -1;     // >= 0 for cover trees
    int previous_index = -1;  // m for inequality factors
    double lambda = 0.0;      // inequality factors only
  };

  Subproblem make_subproblem(SpanningTree tree) const;
  void add_inequality_factor(int m, SpanningTree tree);
  MrfModel assemble_subproblem_model(int subproblem) const;
  void register_edge_membership(int subproblem);
  void project_edge_duals();
  double edge_zero_sum_residual() const;

  const MrfModel& model_;
  std::vector<Labeling> previous_;
  SolveConfig config_;
  TreeCover cover_;
  SplitEnergies split_;
  std::vector<Subproblem> subproblems_;
  std::vector<NodeDuals> delta_;
  std::vector<std::vector<Matrix>> edge_delta_;  // aligned with tree edges
  // per model edge: (subproblem, position) pairs of the copies carrying it
  std::vector<std::vector<std::pair<int, int>>> edge_members_;

  // running average of subproblem indicators (ergodic primal estimate)
  std::vector<Vector> node_sum_;
  std::vector<Matrix> edge_sum_;
  long average_count_ = 0;

  int eta_ = 0;
  int t_ = 0;
  double prev_dual_ = 0.0;
  double last_alpha_ = 1.0;
};

StepResult solve_general_mbest_step(const MrfModel& model,
                                    const std::vector<Labeling>& previous,
                                    const SolveConfig& config = {});

// ---------------------------------------------------------------------------
// M-best driver.

enum class SolutionStatus { kCertifiedOptimal, kLowerBoundOnly };

std::string to_string(SolutionStatus status);

struct RankedSolution {
  Labeling labeling;
  double energy = 0.0;
  double dual_bound = 0.0;
  SolutionStatus status = SolutionStatus::kLowerBoundOnly;
  SolveTrace trace;
};

struct SolveResult {
  int requested = 0;
  std::vector<RankedSolution> solutions;  // pairwise-distinct labelings
  bool shortfall = false;                 // fewer than requested were found
  std::string shortfall_reason;
};

/// Sequential M-best: exact MAP first (tree BP on acyclic inputs, the
/// general solver otherwise), then one exclusion step per additional
/// solution, each treating all earlier solutions as excluded. A step that
/// exhausts its budget without a feasible primal marks the result as a
/// shortfall instead of throwing.
SolveResult solve_mbest(const MrfModel& model, int num_solutions,
                        const SolveConfig& config = {});

}  // namespace mbest
