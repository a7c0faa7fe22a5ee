#include "mbest/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "mbest/model_io.hpp"

namespace mbest {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDeltaFeasibilityTol = 1e-9;

void require_distinct_previous(const MrfModel& model,
                               const std::vector<Labeling>& previous) {
  for (const auto& x : previous) model.require_valid_labeling(x);
  for (std::size_t a = 0; a < previous.size(); ++a)
    for (std::size_t b = a + 1; b < previous.size(); ++b)
      if (labelings_equal(previous[a], previous[b]))
        throw InvalidInput("previous solutions " + std::to_string(a) +
                           " and " + std::to_string(b) + " coincide");
}

}  // namespace

void write_trace_csv(std::ostream& out, const SolveTrace& trace) {
  out << "outer_round,t,dual_value,best_dual,best_primal_energy_or_empty,"
         "active_set_size,alpha,eta\n";
  for (const auto& r : trace.records) {
    out << r.outer_round << "," << r.t << "," << format_double(r.dual_value)
        << "," << format_double(r.best_dual) << ",";
    if (r.best_primal) out << format_double(*r.best_primal);
    out << "," << r.active_set_size << "," << format_double(r.alpha) << ","
        << r.eta << "\n";
  }
}

void project_nonnegative(Vector& v) { v = v.cwiseMax(0.0); }

void project_zero_mean(std::vector<NodeDuals>& delta) {
  if (delta.empty()) return;
  const double count = static_cast<double>(delta.size());
  const std::size_t nodes = delta.front().size();
  for (std::size_t i = 0; i < nodes; ++i) {
    Vector mean = Vector::Zero(delta.front()[i].size());
    for (const auto& block : delta) mean += block[i];
    mean /= count;
    for (auto& block : delta) block[i] -= mean;
  }
}

double zero_sum_residual(const std::vector<NodeDuals>& delta) {
  if (delta.empty()) return 0.0;
  double worst = 0.0;
  const std::size_t nodes = delta.front().size();
  for (std::size_t i = 0; i < nodes; ++i) {
    Vector sum = Vector::Zero(delta.front()[i].size());
    for (const auto& block : delta) sum += block[i];
    worst = std::max(worst, sum.cwiseAbs().maxCoeff());
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Tree-structured models.

MrfModel perturbed_tree_potentials(const MrfModel& tree_model,
                                   const std::vector<Labeling>& previous,
                                   const Vector& lambda) {
  // validates that the edge set is a single spanning tree
  SpanningTree tree =
      make_spanning_tree(tree_model.num_nodes(), tree_model.edges());
  if (lambda.size() != static_cast<Eigen::Index>(previous.size()))
    throw InvalidInput("one multiplier per previous solution required");
  for (const auto& x : previous) tree_model.require_valid_labeling(x);

  std::vector<Vector> unary;
  unary.reserve(tree_model.num_nodes());
  for (int i = 0; i < tree_model.num_nodes(); ++i)
    unary.push_back(tree_model.unary(i));
  std::vector<Matrix> pairwise;
  pairwise.reserve(tree_model.num_edges());
  for (int e = 0; e < tree_model.num_edges(); ++e)
    pairwise.push_back(tree_model.pairwise(e));

  for (std::size_t m = 0; m < previous.size(); ++m) {
    const Labeling& xm = previous[m];
    for (int i = 0; i < tree_model.num_nodes(); ++i)
      unary[i][xm[i]] += lambda[m] * (1.0 - tree.degrees[i]);
    for (int e = 0; e < tree_model.num_edges(); ++e) {
      const auto& [i, j] = tree_model.edge(e);
      pairwise[e](xm[i], xm[j]) += lambda[m];
    }
  }
  return MrfModel(tree_model.cardinalities(), tree_model.edges(),
                  std::move(unary), std::move(pairwise));
}

StepResult solve_tree_mbest_step(const MrfModel& tree_model,
                                 const std::vector<Labeling>& previous,
                                 const SolveConfig& config) {
  SpanningTree tree =
      make_spanning_tree(tree_model.num_nodes(), tree_model.edges());
  require_distinct_previous(tree_model, previous);
  const TreeOrder order = build_tree_order(tree_model);
  const int num_excluded = static_cast<int>(previous.size());

  Vector lambda = Vector::Zero(num_excluded);
  int eta = 0;
  double prev_dual = 0.0;
  double best_dual = -kInf;
  std::optional<Labeling> best_labeling;
  double best_energy = kInf;
  SolveTrace trace;
  bool certified = false;

  const long budget = static_cast<long>(config.outer_rounds) *
                      static_cast<long>(config.inner_iterations);
  for (long t = 0; t < budget; ++t) {
    // TODO: apply the multiplier deltas in place instead of copying every
    // table; the rebuild dominates the per-iteration cost on long chains.
    const MrfModel perturbed =
        perturbed_tree_potentials(tree_model, previous, lambda);
    const TreeMapResult map = tree_map(perturbed, order);
    const double dual = map.value;

    if (t > 0 && dual < prev_dual) ++eta;
    const double alpha = 1.0 / (eta + 1);
    best_dual = std::max(best_dual, dual);

    bool feasible = true;
    for (const auto& xm : previous)
      if (labelings_equal(map.labeling, xm)) {
        feasible = false;
        break;
      }
    if (feasible) {
      const double e = energy(tree_model, map.labeling);
      if (e < best_energy) {
        best_energy = e;
        best_labeling = map.labeling;
      }
    }

    trace.records.push_back({0, static_cast<int>(t), dual, best_dual,
                             best_labeling
                                 ? std::optional<double>(best_energy)
                                 : std::nullopt,
                             num_excluded, alpha, eta});
    prev_dual = dual;

    if (best_labeling && best_energy - best_dual <= config.tolerance) {
      certified = true;
      break;
    }

    for (int m = 0; m < num_excluded; ++m) {
      const double g =
          tree_inequality_value(tree_model, map.labeling, previous[m], tree);
      lambda[m] = std::max(0.0, lambda[m] + alpha * g);
    }
  }

  if (!best_labeling)
    throw BudgetExhausted(
        "no feasible primal within " + std::to_string(budget) +
            " iterations; best dual bound " + format_double(best_dual),
        best_dual, std::move(trace));
  return {*best_labeling, best_energy, best_dual, certified, std::move(trace)};
}

// ---------------------------------------------------------------------------
// General models.

GeneralDualSolver::GeneralDualSolver(const MrfModel& model,
                                     std::vector<Labeling> previous,
                                     SolveConfig config)
    : model_(model), previous_(std::move(previous)), config_(config) {
  require_distinct_previous(model_, previous_);
  cover_ = build_tree_cover(model_);
  split_ = split_energies(model_, cover_);
  edge_members_.resize(model_.num_edges());
  for (std::size_t k = 0; k < cover_.trees.size(); ++k) {
    Subproblem sub = make_subproblem(cover_.trees[k]);
    sub.cover_index = static_cast<int>(k);
    subproblems_.push_back(std::move(sub));
    delta_.emplace_back();
    edge_delta_.emplace_back();
    register_edge_membership(static_cast<int>(subproblems_.size()) - 1);
  }
  for (auto& block : delta_) {
    block.reserve(model_.num_nodes());
    for (int i = 0; i < model_.num_nodes(); ++i)
      block.push_back(Vector::Zero(model_.cardinality(i)));
  }
  node_sum_.reserve(model_.num_nodes());
  for (int i = 0; i < model_.num_nodes(); ++i)
    node_sum_.push_back(Vector::Zero(model_.cardinality(i)));
  edge_sum_.reserve(model_.num_edges());
  for (int e = 0; e < model_.num_edges(); ++e) {
    const auto& [i, j] = model_.edge(e);
    edge_sum_.push_back(
        Matrix::Zero(model_.cardinality(i), model_.cardinality(j)));
  }
}

void GeneralDualSolver::register_edge_membership(int subproblem) {
  const Subproblem& sub = subproblems_[subproblem];
  auto& blocks = edge_delta_[subproblem];
  blocks.reserve(sub.tree.edges.size());
  for (std::size_t k = 0; k < sub.tree.edges.size(); ++k) {
    const auto& [i, j] = sub.tree.edges[k];
    blocks.push_back(
        Matrix::Zero(model_.cardinality(i), model_.cardinality(j)));
    edge_members_[sub.model_edge_ids[k]].push_back(
        {subproblem, static_cast<int>(k)});
  }
}

void GeneralDualSolver::project_edge_duals() {
  for (const auto& members : edge_members_) {
    if (members.empty()) continue;
    Matrix mean = edge_delta_[members[0].first][members[0].second];
    for (std::size_t k = 1; k < members.size(); ++k)
      mean += edge_delta_[members[k].first][members[k].second];
    mean /= static_cast<double>(members.size());
    for (const auto& [sub, pos] : members) edge_delta_[sub][pos] -= mean;
  }
}

double GeneralDualSolver::edge_zero_sum_residual() const {
  double worst = 0.0;
  for (const auto& members : edge_members_) {
    if (members.empty()) continue;
    Matrix sum = edge_delta_[members[0].first][members[0].second];
    for (std::size_t k = 1; k < members.size(); ++k)
      sum += edge_delta_[members[k].first][members[k].second];
    worst = std::max(worst, sum.cwiseAbs().maxCoeff());
  }
  return worst;
}

GeneralDualSolver::Subproblem GeneralDualSolver::make_subproblem(
    SpanningTree tree) const {
  Subproblem sub;
  sub.model_edge_ids.reserve(tree.edges.size());
  for (const auto& [i, j] : tree.edges) {
    const int e = model_.edge_index(i, j);
    if (e < 0)
      throw InvalidInput("subproblem tree edge (" + std::to_string(i) + ", " +
                         std::to_string(j) + ") is absent from the model");
    sub.model_edge_ids.push_back(e);
  }
  sub.order = build_tree_order(model_.num_nodes(), tree.edges);
  sub.tree = std::move(tree);
  return sub;
}

void GeneralDualSolver::add_inequality_factor(int m, SpanningTree tree) {
  Subproblem sub = make_subproblem(std::move(tree));
  sub.previous_index = m;
  subproblems_.push_back(std::move(sub));
  NodeDuals block;
  block.reserve(model_.num_nodes());
  for (int i = 0; i < model_.num_nodes(); ++i)
    block.push_back(Vector::Zero(model_.cardinality(i)));
  delta_.push_back(std::move(block));
  edge_delta_.emplace_back();
  register_edge_membership(static_cast<int>(subproblems_.size()) - 1);
  // fresh zero blocks join the per-node and per-edge means, so restore the
  // invariants
  project_zero_mean(delta_);
  project_edge_duals();
}

MrfModel GeneralDualSolver::assemble_subproblem_model(int subproblem) const {
  const std::size_t idx = static_cast<std::size_t>(subproblem);
  const Subproblem& sub = subproblems_[idx];
  const int n = model_.num_nodes();
  std::vector<Vector> unary;
  unary.reserve(n);
  std::vector<Matrix> pairwise;
  pairwise.reserve(sub.tree.edges.size());

  if (sub.cover_index >= 0) {
    for (int i = 0; i < n; ++i)
      unary.push_back(split_.unary[sub.cover_index][i] + delta_[idx][i]);
    for (std::size_t k = 0; k < sub.tree.edges.size(); ++k)
      pairwise.push_back(split_.pairwise[sub.cover_index][k] +
                         edge_delta_[idx][k]);
  } else {
    const Labeling& xm = previous_[sub.previous_index];
    for (int i = 0; i < n; ++i) {
      Vector u = delta_[idx][i];
      u[xm[i]] += sub.lambda * (1.0 - sub.tree.degrees[i]);
      unary.push_back(std::move(u));
    }
    for (std::size_t k = 0; k < sub.tree.edges.size(); ++k) {
      const auto& [i, j] = sub.tree.edges[k];
      Matrix table = edge_delta_[idx][k];
      table(xm[i], xm[j]) += sub.lambda;
      pairwise.push_back(std::move(table));
    }
  }
  return MrfModel(model_.cardinalities(), sub.tree.edges, std::move(unary),
                  std::move(pairwise));
}

bool GeneralDualSolver::constraint_management() {
  bool added = false;
  const FractionalPrimal estimate = average_primal();
  for (std::size_t m = 0; m < previous_.size(); ++m) {
    const Vector w = separation_weights(model_, estimate, previous_[m]);
    SpanningTree tree =
        max_weight_spanning_tree(model_.num_nodes(), model_.edges(), w);
    bool present = false;
    for (const auto& sub : subproblems_)
      if (sub.previous_index == static_cast<int>(m) && sub.tree == tree) {
        present = true;
        break;
      }
    if (!present) {
      add_inequality_factor(static_cast<int>(m), std::move(tree));
      added = true;
    }
  }
  return added;
}

GeneralDualSolver::Evaluation GeneralDualSolver::evaluate_expanded_lagrangian()
    const {
  const double residual =
      std::max(zero_sum_residual(delta_), edge_zero_sum_residual());
  if (residual > kDeltaFeasibilityTol)
    throw InvalidState("consensus duals violate the zero-sum constraint: " +
                       format_double(residual));
  Evaluation eval;
  eval.argmins.reserve(subproblems_.size());
  for (std::size_t idx = 0; idx < subproblems_.size(); ++idx) {
    const MrfModel sub_model = assemble_subproblem_model(static_cast<int>(idx));
    TreeMapResult map = tree_map(sub_model, subproblems_[idx].order);
    eval.value += map.value;
    eval.argmins.push_back(std::move(map.labeling));
  }
  return eval;
}

void GeneralDualSolver::dual_update(const Evaluation& eval) {
  if (t_ > 0 && eval.value < prev_dual_) ++eta_;
  last_alpha_ = 1.0 / (eta_ + 1);

  for (std::size_t idx = 0; idx < subproblems_.size(); ++idx) {
    Subproblem& sub = subproblems_[idx];
    if (sub.previous_index < 0) continue;
    const double g = tree_inequality_value(
        model_, eval.argmins[idx], previous_[sub.previous_index], sub.tree);
    sub.lambda = std::max(0.0, sub.lambda + last_alpha_ * g);
  }
  for (std::size_t idx = 0; idx < subproblems_.size(); ++idx) {
    const Labeling& x = eval.argmins[idx];
    for (int i = 0; i < model_.num_nodes(); ++i)
      delta_[idx][i][x[i]] += last_alpha_;
    const Subproblem& sub = subproblems_[idx];
    for (std::size_t k = 0; k < sub.tree.edges.size(); ++k) {
      const auto& [i, j] = sub.tree.edges[k];
      edge_delta_[idx][k](x[i], x[j]) += last_alpha_;
    }
  }
  project_zero_mean(delta_);
  project_edge_duals();

  prev_dual_ = eval.value;
  ++t_;
}

void GeneralDualSolver::accumulate_average(
    const std::vector<Labeling>& argmins) {
  const double share = 1.0 / static_cast<double>(subproblems_.size());
  for (std::size_t idx = 0; idx < subproblems_.size(); ++idx) {
    const Labeling& x = argmins[idx];
    for (int i = 0; i < model_.num_nodes(); ++i)
      node_sum_[i][x[i]] += share;
    const Subproblem& sub = subproblems_[idx];
    if (sub.cover_index < 0) continue;  // edge estimate uses cover trees only
    for (std::size_t k = 0; k < sub.tree.edges.size(); ++k) {
      const auto& [i, j] = sub.tree.edges[k];
      const int e = sub.model_edge_ids[k];
      edge_sum_[e](x[i], x[j]) += 1.0 / cover_.edge_multiplicity[e];
    }
  }
  ++average_count_;
}

FractionalPrimal GeneralDualSolver::average_primal() const {
  if (average_count_ == 0) return FractionalPrimal::zero(model_);
  FractionalPrimal mu;
  mu.node_marginals.reserve(node_sum_.size());
  for (const auto& v : node_sum_) mu.node_marginals.push_back(v / average_count_);
  mu.edge_marginals.reserve(edge_sum_.size());
  for (const auto& m : edge_sum_) mu.edge_marginals.push_back(m / average_count_);
  return mu;
}

std::optional<std::pair<Labeling, double>>
GeneralDualSolver::extract_primal_candidate(
    const std::vector<Labeling>& argmins) const {
  std::optional<std::pair<Labeling, double>> best;
  for (const auto& x : argmins) {
    bool excluded = false;
    for (const auto& xm : previous_)
      if (labelings_equal(x, xm)) {
        excluded = true;
        break;
      }
    if (excluded) continue;
    const double e = energy(model_, x);
    if (!best || e < best->second) best = {x, e};
  }
  return best;
}

void GeneralDualSolver::set_delta(std::vector<NodeDuals> delta) {
  if (delta.size() != delta_.size())
    throw InvalidInput("expected one dual block per subproblem");
  for (std::size_t idx = 0; idx < delta.size(); ++idx) {
    if (static_cast<int>(delta[idx].size()) != model_.num_nodes())
      throw InvalidInput("dual block " + std::to_string(idx) +
                         " does not cover every node");
    for (int i = 0; i < model_.num_nodes(); ++i)
      if (delta[idx][i].size() != model_.cardinality(i))
        throw InvalidInput("dual block " + std::to_string(idx) +
                           " has the wrong length at node " +
                           std::to_string(i));
  }
  delta_ = std::move(delta);
}

double GeneralDualSolver::lambda(int subproblem) const {
  const auto& sub = subproblems_.at(subproblem);
  if (sub.previous_index < 0)
    throw InvalidInput("subproblem " + std::to_string(subproblem) +
                       " is a cover tree and carries no lambda");
  return sub.lambda;
}

const SpanningTree& GeneralDualSolver::subproblem_tree(int subproblem) const {
  return subproblems_.at(subproblem).tree;
}

StepResult GeneralDualSolver::run() {
  double best_dual = -kInf;
  std::optional<Labeling> best_labeling;
  double best_energy = kInf;
  SolveTrace trace;
  bool certified = false;
  double last_round_best_dual = -kInf;

  for (int round = 0; round < config_.outer_rounds && !certified; ++round) {
    const bool added = constraint_management();
    for (int k = 0; k < config_.inner_iterations; ++k) {
      const Evaluation eval = evaluate_expanded_lagrangian();
      best_dual = std::max(best_dual, eval.value);
      if (auto candidate = extract_primal_candidate(eval.argmins)) {
        if (candidate->second < best_energy) {
          best_energy = candidate->second;
          best_labeling = std::move(candidate->first);
        }
      }
      accumulate_average(eval.argmins);
      dual_update(eval);
      trace.records.push_back({round, t_ - 1, eval.value, best_dual,
                               best_labeling
                                   ? std::optional<double>(best_energy)
                                   : std::nullopt,
                               active_set_size(), last_alpha_, eta_});
      if (best_labeling && best_energy - best_dual <= config_.tolerance) {
        certified = true;
        break;
      }
    }
    if (!certified) {
      // fixed point: the oracle has nothing to add and the dual stalled
      if (!added &&
          best_dual - last_round_best_dual < config_.dual_stall_tolerance)
        break;
      last_round_best_dual = best_dual;
    }
  }

  if (!best_labeling)
    throw BudgetExhausted("no feasible primal within the round budget; "
                          "best dual bound " +
                              format_double(best_dual),
                          best_dual, std::move(trace));
  return {*best_labeling, best_energy, best_dual, certified, std::move(trace)};
}

StepResult solve_general_mbest_step(const MrfModel& model,
                                    const std::vector<Labeling>& previous,
                                    const SolveConfig& config) {
  GeneralDualSolver solver(model, previous, config);
  return solver.run();
}

// ---------------------------------------------------------------------------
// Driver.

std::string to_string(SolutionStatus status) {
  return status == SolutionStatus::kCertifiedOptimal ? "certified-optimal"
                                                     : "lower-bound-only";
}

SolveResult solve_mbest(const MrfModel& model, int num_solutions,
                        const SolveConfig& config) {
  if (num_solutions < 1)
    throw InvalidInput("number of solutions must be >= 1");
  SolveResult result;
  result.requested = num_solutions;

  const bool acyclic = model.is_forest();
  if (acyclic) {
    const TreeMapResult map = tree_map(model);
    result.solutions.push_back({map.labeling, map.value, map.value,
                                SolutionStatus::kCertifiedOptimal,
                                SolveTrace{}});
  } else {
    if (!model.is_connected())
      throw InvalidInput("M-best on a cyclic graph requires connectivity");
    const StepResult step = solve_general_mbest_step(model, {}, config);
    result.solutions.push_back({step.labeling, step.energy, step.dual_bound,
                                step.certified
                                    ? SolutionStatus::kCertifiedOptimal
                                    : SolutionStatus::kLowerBoundOnly,
                                step.trace});
  }

  for (int m = 2; m <= num_solutions; ++m) {
    std::vector<Labeling> previous;
    previous.reserve(result.solutions.size());
    for (const auto& sol : result.solutions) previous.push_back(sol.labeling);
    try {
      const StepResult step =
          acyclic ? solve_tree_mbest_step(model, previous, config)
                  : solve_general_mbest_step(model, previous, config);
      result.solutions.push_back({step.labeling, step.energy, step.dual_bound,
                                  step.certified
                                      ? SolutionStatus::kCertifiedOptimal
                                      : SolutionStatus::kLowerBoundOnly,
                                  step.trace});
    } catch (const BudgetExhausted& err) {
      result.shortfall = true;
      result.shortfall_reason =
          "solution " + std::to_string(m) + ": " + err.what();
      break;
    }
  }
  return result;
}

}  // namespace mbest
