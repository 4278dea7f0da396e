#include "ranrc/sim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "ranrc/node.hpp"
#include "ranrc/rng.hpp"

namespace ranrc {

namespace {

void validate_problem(const DirectedGraph& g,
                      const std::vector<std::shared_ptr<const CostModel>>& models) {
  if (models.size() != static_cast<std::size_t>(g.node_count()))
    throw std::invalid_argument("simulation: one cost model per node required");
  for (const auto& m : models) {
    if (!m) throw std::invalid_argument("simulation: null cost model");
    if (m->dimension() != models.front()->dimension())
      throw std::invalid_argument("simulation: cost model dimensions differ");
  }
  if (!is_strongly_connected(g))
    throw std::invalid_argument("simulation: graph is not strongly connected");
}

void validate_config(const SimConfig& cfg, int dim) {
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("simulation: epsilon must be > 0");
  if (!(cfg.hessian_floor > 0.0))
    throw std::invalid_argument("simulation: hessian floor must be > 0");
  if (cfg.loss.probability < 0.0 || cfg.loss.probability > 1.0)
    throw std::invalid_argument("simulation: loss probability must be in [0,1]");
  if (cfg.loss.kind == LossModel::Kind::AdversarialBurst && cfg.loss.burst_cap < 1)
    throw std::invalid_argument("simulation: burst cap must be >= 1");
  if (cfg.max_iters < 1) throw std::invalid_argument("simulation: max_iters must be >= 1");
  if (cfg.x0.size() != 0 && cfg.x0.size() != dim)
    throw std::invalid_argument("simulation: x0 dimension mismatch");
}

// Draws the active node and, for each out-edge in ascending neighbor order,
// whether this transmission is delivered. streaks carries per-edge consecutive
// loss counts across rounds.
struct Scheduler {
  Scheduler(const DirectedGraph& g, const SimConfig& cfg)
      : graph(g),
        policy(cfg.activation),
        act_rng(cfg.activation_seed),
        loss(cfg.loss),
        loss_rng(cfg.loss_seed),
        streaks(g.edge_count(), 0) {}

  int draw_active(int k) {
    if (policy == ActivationPolicy::RoundRobin) return k % graph.node_count();
    return act_rng.below(graph.node_count());
  }

  std::vector<int> draw_reliable(int active) {
    std::vector<int> reliable;
    for (int j : graph.out_neighbors(active)) {
      const int e = graph.edge_index(active, j);
      bool lost;
      if (loss.kind == LossModel::Kind::AdversarialBurst && streaks[e] >= loss.burst_cap)
        lost = false;
      else
        lost = loss_rng.bernoulli(loss.probability);
      if (lost) {
        ++streaks[e];
        max_streak = std::max(max_streak, streaks[e]);
      } else {
        streaks[e] = 0;
        reliable.push_back(j);
      }
    }
    return reliable;
  }

  const DirectedGraph& graph;
  ActivationPolicy policy;
  Rng act_rng;
  LossModel loss;
  Rng loss_rng;
  std::vector<long long> streaks;
  long long max_streak = 0;
};

int persistence_bound(const std::vector<TraceRecord>& records, int node_count) {
  const int total = static_cast<int>(records.size());
  std::vector<int> last(node_count, -1);
  std::vector<int> max_gap(node_count, 0);
  for (const TraceRecord& r : records) {
    const int gap = r.k - last[r.active];
    max_gap[r.active] = std::max(max_gap[r.active], gap);
    last[r.active] = r.k;
  }
  int tau_hat = 0;
  for (int v = 0; v < node_count; ++v) {
    const int trailing = total - last[v];  // never activated -> total + 1
    tau_hat = std::max({tau_hat, max_gap[v], trailing});
  }
  return tau_hat;
}

double tail_slope_or_nan(const Trace& t, double tail_fraction) {
  try {
    return estimate_rate(t, tail_fraction);
  } catch (const std::invalid_argument&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

Eigen::VectorXd centralized_newton(const std::vector<std::shared_ptr<const CostModel>>& models,
                                   const Eigen::VectorXd& x0, double tol, int max_iter) {
  if (models.empty()) throw std::invalid_argument("centralized_newton: no cost models");
  const int n = models.front()->dimension();
  Eigen::VectorXd x = x0;
  for (int iter = 0; iter <= max_iter; ++iter) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
    for (const auto& m : models) grad += m->gradient(x);
    if (grad.norm() <= tol) return x;
    if (iter == max_iter) break;
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(n, n);
    for (const auto& m : models) hess += m->hessian(x);
    x -= hess.ldlt().solve(grad);
  }
  throw std::runtime_error("centralized_newton: no convergence to tol " + format_double(tol) +
                           " within " + std::to_string(max_iter) + " iterations");
}

double mse(const std::vector<Eigen::VectorXd>& xs, const Eigen::VectorXd& x_star) {
  if (xs.empty()) throw std::invalid_argument("mse: empty estimate list");
  double total = 0.0;
  for (const auto& x : xs) {
    if (x.size() != x_star.size()) throw std::invalid_argument("mse: dimension mismatch");
    total += (x - x_star).squaredNorm();
  }
  return total / static_cast<double>(xs.size());
}

Trace run_simulation(const DirectedGraph& g,
                     const std::vector<std::shared_ptr<const CostModel>>& models,
                     const SimConfig& cfg, const Eigen::VectorXd& x_star) {
  validate_problem(g, models);
  const int dim = models.front()->dimension();
  validate_config(cfg, dim);
  if (x_star.size() != dim) throw std::invalid_argument("simulation: x_star dimension mismatch");

  const Eigen::VectorXd x0 = cfg.x0.size() == 0 ? Eigen::VectorXd::Zero(dim) : cfg.x0;
  std::vector<NodeState> net = init_network(g, x0);
  Scheduler sched(g, cfg);

  Trace trace;
  trace.x_star = x_star;
  trace.records.reserve(cfg.max_iters);
  std::vector<Eigen::VectorXd> xs(g.node_count());

  for (int k = 0; k < cfg.max_iters; ++k) {
    const int active = sched.draw_active(k);
    std::vector<int> reliable = sched.draw_reliable(active);

    AugmentedState before;
    Eigen::MatrixXd g_before, h_before;
    if (cfg.verify_matrix_form) {
      before = stack_augmented(g, net);
      g_before.resize(g.node_count(), dim);
      h_before.resize(g.node_count(), dim * dim);
      for (int v = 0; v < g.node_count(); ++v) {
        g_before.row(v) = net[v].g.transpose();
        h_before.row(v) = Eigen::Map<const Eigen::RowVectorXd>(net[v].h.data(), dim * dim);
      }
    }

    broadcast_round(net, g, active, reliable, models, cfg.epsilon, cfg.hessian_floor,
                    cfg.variant);

    if (cfg.verify_matrix_form) {
      const StepMatrices sm = build_step_matrices(g, active, reliable);
      Eigen::MatrixXd g_after(g.node_count(), dim), h_after(g.node_count(), dim * dim);
      for (int v = 0; v < g.node_count(); ++v) {
        g_after.row(v) = net[v].g.transpose();
        h_after.row(v) = Eigen::Map<const Eigen::RowVectorXd>(net[v].h.data(), dim * dim);
      }
      const AugmentedState after = stack_augmented(g, net);
      const double dev_y =
          (after.y - (sm.m * before.y + sm.t * (g_after - g_before))).cwiseAbs().maxCoeff();
      const double dev_z =
          (after.z - (sm.m * before.z + sm.t * (h_after - h_before))).cwiseAbs().maxCoeff();
      trace.summary.max_matrix_form_dev =
          std::max({trace.summary.max_matrix_form_dev, dev_y, dev_z});
    }

    TraceRecord rec;
    rec.k = k;
    rec.active = active;
    rec.reliable = std::move(reliable);
    for (int v = 0; v < g.node_count(); ++v) xs[v] = net[v].x;
    rec.mse = mse(xs, x_star);

    const MassResidual res = mass_residual(net, g);
    rec.mass_residual_y = res.y;
    rec.mass_residual_z = res.z;
    Eigen::VectorXd g_sum = Eigen::VectorXd::Zero(dim);
    Eigen::MatrixXd h_sum = Eigen::MatrixXd::Zero(dim, dim);
    for (const NodeState& s : net) {
      g_sum += s.g;
      h_sum += s.h;
    }
    trace.summary.max_rel_mass_residual =
        std::max({trace.summary.max_rel_mass_residual,
                  res.y / (1.0 + g_sum.cwiseAbs().maxCoeff()),
                  res.z / (1.0 + h_sum.cwiseAbs().maxCoeff())});

    trace.records.push_back(std::move(rec));
    if (cfg.snapshot_stride > 0 && k % cfg.snapshot_stride == 0)
      trace.snapshots.emplace_back(k, xs);

    const double current = trace.records.back().mse;
    if (!std::isfinite(current) || current > cfg.divergence_mse) {
      trace.summary.diverged = true;
      trace.summary.diagnostic = "MSE " + format_double(current) + " exceeded guard " +
                                 format_double(cfg.divergence_mse) + " at iteration " +
                                 std::to_string(k);
      break;
    }
  }

  trace.summary.iterations = static_cast<int>(trace.records.size());
  trace.summary.final_mse = trace.records.back().mse;
  trace.summary.tau_hat = persistence_bound(trace.records, g.node_count());
  trace.summary.loss_streak = sched.max_streak;
  trace.summary.tail_slope = tail_slope_or_nan(trace, 0.5);
  return trace;
}

Trace run_simulation(const DirectedGraph& g,
                     const std::vector<std::shared_ptr<const CostModel>>& models,
                     const SimConfig& cfg) {
  validate_problem(g, models);
  const int dim = models.front()->dimension();
  validate_config(cfg, dim);
  const Eigen::VectorXd x0 = cfg.x0.size() == 0 ? Eigen::VectorXd::Zero(dim) : cfg.x0;
  return run_simulation(g, models, cfg, centralized_newton(models, x0));
}

std::pair<int, long long> assumption_monitors(const Trace& t, const DirectedGraph& g) {
  if (t.records.empty()) throw std::invalid_argument("assumption_monitors: empty trace");
  const int tau_hat = persistence_bound(t.records, g.node_count());

  std::vector<long long> streak(g.edge_count(), 0);
  long long worst = 0;
  for (const TraceRecord& r : t.records) {
    for (int j : g.out_neighbors(r.active)) {
      const int e = g.edge_index(r.active, j);
      const bool delivered =
          std::find(r.reliable.begin(), r.reliable.end(), j) != r.reliable.end();
      if (delivered) {
        streak[e] = 0;
      } else {
        ++streak[e];
        worst = std::max(worst, streak[e]);
      }
    }
  }
  return {tau_hat, worst};
}

double estimate_rate(const Trace& t, double tail_fraction) {
  if (!(tail_fraction > 0.0) || tail_fraction > 1.0)
    throw std::invalid_argument("estimate_rate: tail_fraction must be in (0,1]");
  const std::size_t total = t.records.size();
  const std::size_t tail =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(tail_fraction * total)));
  std::vector<std::pair<double, double>> pts;  // (k, log10 mse)
  for (std::size_t idx = total - tail; idx < total; ++idx) {
    const TraceRecord& r = t.records[idx];
    if (r.mse > 0.0 && std::isfinite(r.mse))
      pts.emplace_back(static_cast<double>(r.k), std::log10(std::max(r.mse, 1e-300)));
  }
  if (pts.size() < 10)
    throw std::invalid_argument("estimate_rate: need at least 10 positive-MSE samples in tail");
  double mean_k = 0.0, mean_v = 0.0;
  for (const auto& [k, v] : pts) {
    mean_k += k;
    mean_v += v;
  }
  mean_k /= static_cast<double>(pts.size());
  mean_v /= static_cast<double>(pts.size());
  double num = 0.0, den = 0.0;
  for (const auto& [k, v] : pts) {
    num += (k - mean_k) * (v - mean_v);
    den += (k - mean_k) * (k - mean_k);
  }
  if (den == 0.0) return 0.0;
  return num / den;
}

std::optional<int> iterations_to_threshold(const Trace& t, double mse_threshold) {
  for (const TraceRecord& r : t.records)
    if (r.mse <= mse_threshold) return r.k;
  return std::nullopt;
}

FrozenRatioTrace run_frozen_ratio(const DirectedGraph& g,
                                  const std::vector<std::shared_ptr<const CostModel>>& models,
                                  const Eigen::VectorXd& x_fixed, ActivationPolicy activation,
                                  std::uint64_t activation_seed, LossModel loss,
                                  std::uint64_t loss_seed, int iters, double hessian_floor) {
  validate_problem(g, models);
  const int dim = models.front()->dimension();
  if (x_fixed.size() != dim)
    throw std::invalid_argument("run_frozen_ratio: x_fixed dimension mismatch");

  Eigen::VectorXd g_sum = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd h_sum = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& m : models) {
    g_sum += local_g(*m, x_fixed);
    h_sum += local_h(*m, x_fixed);
  }

  FrozenRatioTrace out;
  out.p_star = h_sum.ldlt().solve(g_sum);
  out.residuals.reserve(iters);

  SimConfig cfg;
  cfg.activation = activation;
  cfg.activation_seed = activation_seed;
  cfg.loss = loss;
  cfg.loss_seed = loss_seed;
  Scheduler sched(g, cfg);

  std::vector<NodeState> net = init_network(g, x_fixed);
  for (int k = 0; k < iters; ++k) {
    const int active = sched.draw_active(k);
    const std::vector<int> reliable = sched.draw_reliable(active);
    broadcast_round(net, g, active, reliable, models, 0.0, hessian_floor,
                    DescentVariant::NewtonRaphson);
    double worst = 0.0;
    for (const NodeState& s : net) {
      const Eigen::VectorXd p = cmax(s.z, hessian_floor).llt().solve(s.y);
      worst = std::max(worst, (p - out.p_star).cwiseAbs().maxCoeff());
    }
    out.residuals.push_back(worst);
  }

  // Fitted log-residual slope over the second half.
  std::vector<std::pair<double, double>> pts;
  for (std::size_t idx = out.residuals.size() / 2; idx < out.residuals.size(); ++idx)
    if (out.residuals[idx] > 0.0)
      pts.emplace_back(static_cast<double>(idx), std::log10(std::max(out.residuals[idx], 1e-300)));
  if (pts.size() >= 10) {
    double mean_k = 0.0, mean_v = 0.0;
    for (const auto& [kk, v] : pts) {
      mean_k += kk;
      mean_v += v;
    }
    mean_k /= static_cast<double>(pts.size());
    mean_v /= static_cast<double>(pts.size());
    double num = 0.0, den = 0.0;
    for (const auto& [kk, v] : pts) {
      num += (kk - mean_k) * (v - mean_v);
      den += (kk - mean_k) * (kk - mean_k);
    }
    if (den > 0.0) out.tail_slope = num / den;
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

void write_trace_csv(const Trace& t, std::ostream& out) {
  out << "iteration,active_node,mse,mass_residual_y,mass_residual_z\n";
  for (const TraceRecord& r : t.records)
    out << r.k << ',' << r.active << ',' << format_double(r.mse) << ','
        << format_double(r.mass_residual_y) << ',' << format_double(r.mass_residual_z) << '\n';
}

void save_trace_csv(const Trace& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_trace_csv: cannot open " + path);
  write_trace_csv(t, out);
}

void write_trace_summary(const Trace& t, std::ostream& out) {
  const TraceSummary& s = t.summary;
  out << "iterations " << s.iterations << "\n"
      << "final_mse " << format_double(s.final_mse) << "\n"
      << "tail_slope " << format_double(s.tail_slope) << "\n"
      << "tau_hat " << s.tau_hat << "\n"
      << "loss_streak " << s.loss_streak << "\n"
      << "max_rel_mass_residual " << format_double(s.max_rel_mass_residual) << "\n"
      << "diverged " << (s.diverged ? 1 : 0) << "\n";
  if (!s.diagnostic.empty()) out << "diagnostic " << s.diagnostic << "\n";
}

}  // namespace ranrc
