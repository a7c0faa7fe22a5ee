// Command-line front end: load or generate models, run M-best solves, emit
// solutions, traces and experiment reports.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mbest/bench.hpp"
#include "mbest/model_io.hpp"
#include "mbest/oracle.hpp"
#include "mbest/solver.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitShortfall = 3;

struct SolveOptions {
  std::string model_path;
  int num_solutions = 1;
  mbest::SolveConfig config;
  std::string trace_path;
  std::string output_path;
};

struct GenerateOptions {
  std::string family = "random-tree";
  int n = 1;
  std::uint64_t seed = 0;
  int labels = 0;
  std::string output_path;
};

struct ExperimentOptions {
  std::string family = "random-tree";
  std::vector<int> sizes;
  int seeds = 1;
  std::uint64_t seed_base = 0;
  int num_solutions = 2;
  mbest::SolveConfig config;
  bool no_oracle = false;
  std::string report_path;
};

void write_result_document(std::ostream& out, const mbest::SolveResult& result) {
  out << "mbest-result 1\n";
  out << "m " << result.requested << "\n";
  out << "solutions " << result.solutions.size() << "\n";
  for (std::size_t k = 0; k < result.solutions.size(); ++k) {
    const auto& sol = result.solutions[k];
    out << "solution " << (k + 1) << " energy "
        << mbest::format_double(sol.energy) << " dual_bound "
        << mbest::format_double(sol.dual_bound) << " status "
        << mbest::to_string(sol.status) << " labels";
    for (int i = 0; i < sol.labeling.size(); ++i) out << " " << sol.labeling[i];
    out << "\n";
  }
  if (result.shortfall) out << "shortfall " << result.shortfall_reason << "\n";
}

// trace files are written one per solution: <prefix>.m<k>.csv
std::string trace_file_name(const std::string& base, int m) {
  std::string prefix = base;
  const std::string ext = ".csv";
  if (prefix.size() > ext.size() &&
      prefix.compare(prefix.size() - ext.size(), ext.size(), ext) == 0)
    prefix.resize(prefix.size() - ext.size());
  return prefix + ".m" + std::to_string(m) + ".csv";
}

int run_solve(const SolveOptions& opt) {
  const mbest::MrfModel model = mbest::load_model(opt.model_path);
  const mbest::SolveResult result =
      mbest::solve_mbest(model, opt.num_solutions, opt.config);

  if (!opt.trace_path.empty()) {
    for (std::size_t k = 0; k < result.solutions.size(); ++k) {
      const std::string path =
          trace_file_name(opt.trace_path, static_cast<int>(k) + 1);
      std::ofstream out(path);
      if (!out) throw std::runtime_error(path + ": cannot open for writing");
      mbest::write_trace_csv(out, result.solutions[k].trace);
    }
  }

  if (opt.output_path.empty()) {
    write_result_document(std::cout, result);
  } else {
    std::ofstream out(opt.output_path);
    if (!out)
      throw std::runtime_error(opt.output_path + ": cannot open for writing");
    write_result_document(out, result);
  }

  if (result.shortfall) {
    std::cerr << "mbest: " << result.shortfall_reason << "\n";
    return kExitShortfall;
  }
  return kExitOk;
}

int run_generate(const GenerateOptions& opt) {
  const auto family = mbest::bench::parse_family(opt.family);
  if (!family) throw mbest::InvalidInput("unknown family '" + opt.family + "'");
  mbest::bench::GeneratorSpec spec{*family, opt.n, opt.seed, opt.labels};
  const mbest::MrfModel model = mbest::bench::generate(spec);
  if (opt.output_path.empty() || opt.output_path == "-")
    mbest::write_model(model, std::cout);
  else
    mbest::save_model(model, opt.output_path);
  return kExitOk;
}

int run_experiment(const ExperimentOptions& opt) {
  const auto family = mbest::bench::parse_family(opt.family);
  if (!family) throw mbest::InvalidInput("unknown family '" + opt.family + "'");
  mbest::bench::ExperimentConfig config;
  config.solve = opt.config;
  config.with_oracle = !opt.no_oracle;

  std::vector<mbest::bench::ExperimentRow> rows;
  for (int n : opt.sizes)
    for (int s = 0; s < opt.seeds; ++s) {
      mbest::bench::GeneratorSpec spec{*family, n, opt.seed_base + s, 0};
      auto batch =
          mbest::bench::run_experiment(spec, opt.num_solutions, config);
      rows.insert(rows.end(), batch.begin(), batch.end());
    }

  if (opt.report_path.empty() || opt.report_path == "-") {
    mbest::bench::write_report_csv(std::cout, rows);
  } else {
    std::ofstream out(opt.report_path);
    if (!out)
      throw std::runtime_error(opt.report_path + ": cannot open for writing");
    mbest::bench::write_report_csv(out, rows);
  }
  return kExitOk;
}

void add_solver_flags(CLI::App* cmd, mbest::SolveConfig& config) {
  cmd->add_option("--tolerance", config.tolerance,
                  "primal-dual gap that certifies optimality")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--outer-rounds", config.outer_rounds,
                  "constraint-management round budget")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--inner-iterations", config.inner_iterations,
                  "primal/dual iterations per round")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"M-best MAP solver for pairwise MRFs"};
  app.require_subcommand(1);

  SolveOptions solve_opt;
  CLI::App* solve = app.add_subcommand("solve", "solve M-best on a model file");
  solve->add_option("--model", solve_opt.model_path, "model file")->required();
  solve->add_option("--m", solve_opt.num_solutions, "number of solutions")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_solver_flags(solve, solve_opt.config);
  solve->add_option("--trace", solve_opt.trace_path,
                    "per-solution trace CSV prefix");
  solve->add_option("--output", solve_opt.output_path,
                    "result document path (default: stdout)");

  GenerateOptions gen_opt;
  CLI::App* generate =
      app.add_subcommand("generate", "write a synthetic model file");
  generate
      ->add_option("--family", gen_opt.family,
                   "random-tree | grid-submodular-2label | grid-general-4label")
      ->capture_default_str();
  generate->add_option("--n", gen_opt.n, "node count (square for grids)")
      ->required()
      ->check(CLI::PositiveNumber);
  generate->add_option("--seed", gen_opt.seed, "RNG seed")
      ->capture_default_str();
  generate->add_option("--labels", gen_opt.labels,
                       "label count (random-tree only; default 4)");
  generate->add_option("--output", gen_opt.output_path,
                       "model file path (default: stdout)");

  ExperimentOptions exp_opt;
  CLI::App* experiment = app.add_subcommand(
      "experiment", "solver-vs-oracle sweep, one CSV row per (instance, m)");
  experiment
      ->add_option("--family", exp_opt.family,
                   "random-tree | grid-submodular-2label | grid-general-4label")
      ->capture_default_str();
  experiment->add_option("--n", exp_opt.sizes, "node counts to sweep")
      ->required();
  experiment->add_option("--seeds", exp_opt.seeds, "number of seeds per size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  experiment->add_option("--seed-base", exp_opt.seed_base, "first seed value")
      ->capture_default_str();
  experiment->add_option("--m", exp_opt.num_solutions, "number of solutions")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_solver_flags(experiment, exp_opt.config);
  experiment->add_flag("--no-oracle", exp_opt.no_oracle,
                       "skip brute-force reference energies");
  experiment->add_option("--report", exp_opt.report_path,
                         "report CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints usage or help text
    return e.get_name() == "CallForHelp" ? kExitOk : kExitUsage;
  }

  try {
    if (solve->parsed()) return run_solve(solve_opt);
    if (generate->parsed()) return run_generate(gen_opt);
    if (experiment->parsed()) return run_experiment(exp_opt);
  } catch (const mbest::BudgetExhausted& e) {
    std::cerr << "mbest: " << e.what() << "\n";
    return kExitShortfall;
  } catch (const std::exception& e) {
    std::cerr << "mbest: " << e.what() << "\n";
    return kExitError;
  }
  return kExitUsage;
}
