#include <CLI11.hpp>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ranrc/experiment.hpp"
#include "ranrc/node.hpp"
#include "ranrc/sim.hpp"

namespace {

using namespace ranrc;

std::map<std::string, std::string> collect_overrides(const std::vector<std::string>& sets,
                                                     const std::string& epsilon,
                                                     const std::string& loss,
                                                     const std::string& out_dir, bool plot,
                                                     long long seed) {
  std::map<std::string, std::string> overrides;
  for (const std::string& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  if (!epsilon.empty()) overrides["epsilon"] = epsilon;
  if (!loss.empty()) overrides["loss"] = loss;
  if (!out_dir.empty()) overrides["out_dir"] = out_dir;
  if (plot) overrides["plot"] = "1";
  if (seed >= 0) {
    overrides["graph_seed"] = std::to_string(seed);
    overrides["quad_seed"] = std::to_string(seed + 1);
    overrides["partition_seed"] = std::to_string(seed + 2);
    overrides["activation_seed"] = std::to_string(seed + 3);
    overrides["loss_seed"] = std::to_string(seed + 4);
  }
  return overrides;
}

int cmd_run(const std::string& config, const std::map<std::string, std::string>& overrides) {
  const ExperimentSpec spec = parse_config(config, overrides);
  std::cout << "resolved configuration:\n" << spec_to_config_text(spec) << "\n";
  const ExperimentResult result = run_experiment(spec);
  std::cout << "x_star =";
  for (long i = 0; i < result.x_star.size(); ++i)
    std::cout << ' ' << format_double(result.x_star[i]);
  std::cout << "\n\nepsilon loss status iterations final_mse tail_slope tau_hat loss_streak\n";
  for (const ExperimentCell& c : result.cells) {
    std::cout << format_double(c.epsilon) << ' ' << format_double(c.loss_prob) << ' ';
    if (c.ok)
      std::cout << (c.summary.diverged ? "diverged " : "ok ") << c.summary.iterations << ' '
                << format_double(c.summary.final_mse) << ' '
                << format_double(c.summary.tail_slope) << ' ' << c.summary.tau_hat << ' '
                << c.summary.loss_streak << "\n";
    else
      std::cout << "error: " << c.error << "\n";
  }
  std::cout << "\nartifacts in " << result.out_dir << "\n";
  return result.all_ok() ? 0 : 1;
}

bool report(const std::string& name, bool ok, const std::string& detail = "") {
  std::cout << (ok ? "PASS " : "FAIL ") << name;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << "\n";
  return ok;
}

// Invariant suite on a small random instance: conservation, matrix-form
// agreement, column stochasticity, duplicate-delivery idempotence and
// determinism all have to hold on any seed.
int cmd_check(int nodes, long long seed, int iters) {
  const DirectedGraph g = generate_connected_geometric(nodes, 0.8, static_cast<std::uint64_t>(seed));
  const auto models = make_random_quadratics(g.node_count(), 2, 50.0,
                                             static_cast<std::uint64_t>(seed) + 1);
  SimConfig cfg;
  cfg.epsilon = 0.05;
  cfg.loss = LossModel::bernoulli(0.3);
  cfg.activation_seed = static_cast<std::uint64_t>(seed) + 2;
  cfg.loss_seed = static_cast<std::uint64_t>(seed) + 3;
  cfg.max_iters = iters;
  cfg.verify_matrix_form = true;

  const Trace trace = run_simulation(g, models, cfg);
  bool all = true;
  all &= report("mass conservation", trace.summary.max_rel_mass_residual <= 1e-9,
                "max relative residual " + format_double(trace.summary.max_rel_mass_residual));
  all &= report("matrix-form agreement", trace.summary.max_matrix_form_dev <= 1e-12,
                "max deviation " + format_double(trace.summary.max_matrix_form_dev));
  all &= report("run completed", !trace.summary.diverged);

  double worst_col = 0.0;
  for (int i = 0; i < g.node_count(); ++i) {
    const auto& out = g.out_neighbors(i);
    for (unsigned mask = 0; mask < (1u << out.size()); ++mask) {
      std::vector<int> reliable;
      for (std::size_t b = 0; b < out.size(); ++b)
        if (mask & (1u << b)) reliable.push_back(out[b]);
      const StepMatrices sm = build_step_matrices(g, i, reliable);
      worst_col = std::max(
          worst_col, (sm.m.colwise().sum().array() - 1.0).abs().maxCoeff());
    }
  }
  all &= report("column stochasticity", worst_col <= 1e-12,
                "max |column sum - 1| " + format_double(worst_col));

  {
    std::vector<NodeState> net = init_network(g, Eigen::VectorXd::Zero(2));
    broadcast_round(net, g, 0, g.out_neighbors(0), models, cfg.epsilon, cfg.hessian_floor,
                    cfg.variant);
    const int receiver = g.out_neighbors(0).front();
    const Message again{0, net[0].sigma_y, net[0].sigma_z};
    const Eigen::VectorXd y_before = net[receiver].y;
    data_reception(net[receiver], again);
    all &= report("duplicate delivery is idempotent",
                  (net[receiver].y - y_before).cwiseAbs().maxCoeff() == 0.0);
  }

  std::ostringstream a, b;
  write_trace_csv(trace, a);
  write_trace_csv(run_simulation(g, models, cfg), b);
  all &= report("determinism", a.str() == b.str());

  std::cout << (all ? "all checks passed\n" : "checks FAILED\n");
  return all ? 0 : 1;
}

int cmd_oracle(const std::string& config, const std::map<std::string, std::string>& overrides) {
  const ExperimentSpec spec = parse_config(config, overrides);
  const ExperimentProblem problem = build_problem(spec);
  const int dim = problem.models.front()->dimension();
  const Eigen::VectorXd x0 =
      spec.base.x0.size() == 0 ? Eigen::VectorXd::Zero(dim) : spec.base.x0;
  const Eigen::VectorXd x_star = centralized_newton(problem.models, x0);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
  for (const auto& m : problem.models) grad += m->gradient(x_star);
  std::cout << "x_star =";
  for (long i = 0; i < x_star.size(); ++i) std::cout << ' ' << format_double(x_star[i]);
  std::cout << "\ngradient_norm = " << format_double(grad.norm()) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ranrc: robust asynchronous Newton-Raphson consensus simulator"};
  app.require_subcommand(1);

  std::string config, epsilon_list, loss_list, out_dir;
  std::vector<std::string> sets;
  long long seed = -1;
  bool plot = false;

  CLI::App* run = app.add_subcommand("run", "run an experiment sweep from a config file");
  run->add_option("--config", config, "config file (key = value lines)")->required();
  run->add_option("--epsilon", epsilon_list, "comma-separated step sizes (overrides config)");
  run->add_option("--loss", loss_list, "comma-separated loss probabilities (overrides config)");
  run->add_option("--seed", seed, "base seed; derives graph/cost/partition/run seeds");
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--plot", plot, "emit an SVG overlay of log10-MSE curves");
  run->add_option("--set", sets, "extra key=value overrides")->take_all();

  int check_nodes = 5, check_iters = 800;
  long long check_seed = 1;
  CLI::App* check = app.add_subcommand("check", "run the invariant suite on a random instance");
  check->add_option("--nodes", check_nodes, "instance size");
  check->add_option("--seed", check_seed, "instance seed");
  check->add_option("--iters", check_iters, "broadcast rounds to simulate");

  CLI::App* oracle = app.add_subcommand("oracle", "print the centralized optimum for a config");
  oracle->add_option("--config", config, "config file")->required();
  oracle->add_option("--set", sets, "extra key=value overrides")->take_all();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(config, collect_overrides(sets, epsilon_list, loss_list, out_dir, plot, seed));
    if (check->parsed()) return cmd_check(check_nodes, check_seed, check_iters);
    if (oracle->parsed())
      return cmd_oracle(config, collect_overrides(sets, "", "", "", false, -1));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
