#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ranrc/costs.hpp"
#include "ranrc/graph.hpp"

namespace ranrc {

enum class ActivationPolicy { UniformRandom, RoundRobin };

struct LossModel {
  enum class Kind {
    Bernoulli,         // i.i.d. loss per (edge, transmission)
    AdversarialBurst,  // Bernoulli, but a delivery is forced once an edge has
                       // burst_cap consecutive losses, so streaks stay bounded
  };
  Kind kind = Kind::Bernoulli;
  double probability = 0.0;
  int burst_cap = 1;

  static LossModel lossless() { return {Kind::Bernoulli, 0.0, 1}; }
  static LossModel bernoulli(double p) { return {Kind::Bernoulli, p, 1}; }
  static LossModel burst(double p, int cap) { return {Kind::AdversarialBurst, p, cap}; }
};

/// Everything that determines a run. Two runs with equal configs produce
/// byte-identical traces.
struct SimConfig {
  double epsilon = 0.01;
  double hessian_floor = 1e-4;  // the c of the positivity guard
  DescentVariant variant = DescentVariant::NewtonRaphson;
  ActivationPolicy activation = ActivationPolicy::UniformRandom;
  std::uint64_t activation_seed = 1;
  LossModel loss = LossModel::lossless();
  std::uint64_t loss_seed = 2;
  int max_iters = 1000;
  Eigen::VectorXd x0;           // empty means the zero vector
  int snapshot_stride = 0;      // record per-node x every this many iterations (0 = never)
  double divergence_mse = 1e12;
  bool verify_matrix_form = false;  // maintain the matrix-form oracle each round (O((N+E)^2))
};

struct TraceRecord {
  int k = 0;
  int active = -1;
  std::vector<int> reliable;
  double mse = 0.0;
  double mass_residual_y = 0.0;
  double mass_residual_z = 0.0;
};

struct TraceSummary {
  int tau_hat = 0;            // max inter-activation gap over nodes
  long long loss_streak = 0;  // max consecutive failures over directed edges
  double tail_slope = std::numeric_limits<double>::quiet_NaN();
  double final_mse = std::numeric_limits<double>::quiet_NaN();
  double max_rel_mass_residual = 0.0;  // max over time of residual / (1 + ||mass total||)
  double max_matrix_form_dev = 0.0;    // populated only when verify_matrix_form
  bool diverged = false;
  std::string diagnostic;
  int iterations = 0;
};

struct Trace {
  std::vector<TraceRecord> records;
  std::vector<std::pair<int, std::vector<Eigen::VectorXd>>> snapshots;
  Eigen::VectorXd x_star;
  TraceSummary summary;
};

/// Full Newton iteration on sum_i f_i from x0; returns the minimizer once
/// ||sum_i grad f_i|| <= tol, throws std::runtime_error if max_iter steps do
/// not get there.
Eigen::VectorXd centralized_newton(const std::vector<std::shared_ptr<const CostModel>>& models,
                                   const Eigen::VectorXd& x0, double tol = 1e-12,
                                   int max_iter = 100);

/// (1/N) sum_i ||x_i - x_star||^2.
double mse(const std::vector<Eigen::VectorXd>& xs, const Eigen::VectorXd& x_star);

/// Runs cfg.max_iters asymmetric-broadcast rounds over the graph, recording
/// MSE against x_star and the conservation residuals each round. Requires a
/// strongly connected graph. An MSE above cfg.divergence_mse (or a non-finite
/// one) aborts the run with summary.diverged set.
Trace run_simulation(const DirectedGraph& g,
                     const std::vector<std::shared_ptr<const CostModel>>& models,
                     const SimConfig& cfg, const Eigen::VectorXd& x_star);

/// As above with x_star computed by centralized_newton from cfg.x0.
Trace run_simulation(const DirectedGraph& g,
                     const std::vector<std::shared_ptr<const CostModel>>& models,
                     const SimConfig& cfg);

/// Activation-persistence and loss-streak monitors recomputed from a trace:
/// tau_hat is the largest window any node went without transmitting (counting
/// the run's leading and trailing windows), loss_streak the longest run of
/// consecutive failures on any directed edge.
std::pair<int, long long> assumption_monitors(const Trace& t, const DirectedGraph& g);

/// Least-squares slope of log10(MSE) per iteration over the trailing
/// tail_fraction of the records. MSE values are floored at 1e-300; requires at
/// least 10 strictly positive samples in the tail.
double estimate_rate(const Trace& t, double tail_fraction);

/// First iteration index whose recorded MSE is at or below the threshold.
std::optional<int> iterations_to_threshold(const Trace& t, double mse_threshold);

/// Consensus-only run: x is pinned (epsilon = 0), so after every node has
/// injected its (g, h) once the masses evolve by pure ratio consensus and the
/// per-node ratios contract toward solve(sum h, sum g). residuals[k] is
/// max_i ||p_i(k) - p_star||_inf.
struct FrozenRatioTrace {
  std::vector<double> residuals;
  Eigen::VectorXd p_star;
  double tail_slope = std::numeric_limits<double>::quiet_NaN();
};

FrozenRatioTrace run_frozen_ratio(const DirectedGraph& g,
                                  const std::vector<std::shared_ptr<const CostModel>>& models,
                                  const Eigen::VectorXd& x_fixed, ActivationPolicy activation,
                                  std::uint64_t activation_seed, LossModel loss,
                                  std::uint64_t loss_seed, int iters, double hessian_floor);

/// CSV with header iteration,active_node,mse,mass_residual_y,mass_residual_z;
/// doubles in shortest round-trip form.
void write_trace_csv(const Trace& t, std::ostream& out);
void save_trace_csv(const Trace& t, const std::string& path);

/// Key-value text block with the run summary (monitors, slopes, final MSE).
void write_trace_summary(const Trace& t, std::ostream& out);

/// Shortest round-trip decimal form of a double (the formatting used in every
/// artifact this library emits).
std::string format_double(double v);

}  // namespace ranrc
