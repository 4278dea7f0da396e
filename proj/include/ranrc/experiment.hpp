#pragma once

#include <map>
#include <string>
#include <vector>

#include "ranrc/ingest.hpp"
#include "ranrc/sim.hpp"

namespace ranrc {

/// A sweep description: one simulated problem, a grid of (epsilon, loss
/// probability) cells, and where the artifacts go.
struct ExperimentSpec {
  // Problem.
  std::string cost = "quadratic";  // "quadratic" | "binomial_deviance"
  int nodes = 10;
  double radius = 0.5;
  std::uint64_t graph_seed = 1;
  std::string graph_file;  // explicit topology; overrides the geometric generator

  // Quadratic costs.
  int dimension = 2;
  double cond_max = 100.0;
  std::uint64_t quad_seed = 5;

  // Binomial-deviance costs.
  std::string dataset;  // falls back to the RANRC_DATA environment variable
  std::vector<int> feature_columns = {0, 1, 2};
  double gamma = 1e-2;
  std::uint64_t partition_seed = 4;
  bool balanced = false;
  bool standardize = false;

  // Dynamics shared by every cell; epsilon and loss get overwritten per cell.
  SimConfig base;
  std::vector<double> epsilons = {0.01};
  std::vector<double> loss_probs = {0.0};
  std::string loss_model = "bernoulli";  // "bernoulli" | "burst"
  int burst_cap = 10;

  // Outputs.
  std::string out_dir = "out";
  bool plot = false;
};

/// Flat key=value config text ('#'/';' comments). Later pairs in `overrides`
/// win over the file. Unknown keys, unparsable values, empty sweep lists,
/// non-positive epsilons and a missing dataset (for binomial_deviance, after
/// consulting RANRC_DATA) are all validation errors.
ExperimentSpec parse_config(const std::string& path,
                            const std::map<std::string, std::string>& overrides = {});

/// Same, from config text already in memory.
ExperimentSpec parse_config_text(const std::string& text,
                                 const std::map<std::string, std::string>& overrides = {});

/// The resolved spec echoed back in config syntax (what `parse_config` of the
/// result would reproduce).
std::string spec_to_config_text(const ExperimentSpec& spec);

struct ExperimentCell {
  double epsilon = 0.0;
  double loss_prob = 0.0;
  bool ok = false;
  std::string error;  // non-empty when ok is false
  std::string csv_path;
  TraceSummary summary;
};

struct ExperimentResult {
  Eigen::VectorXd x_star;
  std::vector<ExperimentCell> cells;
  std::string out_dir;
  bool all_ok() const;
};

/// Materializes the problem (graph + per-node costs), computes the centralized
/// optimum, then runs every (epsilon, loss) cell. Per cell it writes
/// trace_eps<e>_p<p>.csv; the sweep also writes graph.txt, resolved.ini,
/// summary.txt and (optionally) plot.svg into out_dir. Simulation errors are
/// recorded per cell without aborting the sweep. Re-running an identical spec
/// rewrites every artifact byte-identically.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// The problem a spec describes, for callers that want the pieces themselves.
struct ExperimentProblem {
  DirectedGraph graph;
  std::vector<std::shared_ptr<const CostModel>> models;
};
ExperimentProblem build_problem(const ExperimentSpec& spec);

/// Dataset path resolution: explicit spec value, else RANRC_DATA, else error.
std::string resolve_dataset_path(const ExperimentSpec& spec);

}  // namespace ranrc
