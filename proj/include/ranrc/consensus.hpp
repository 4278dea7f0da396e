#pragma once

#include <Eigen/Core>
#include <vector>

#include "ranrc/graph.hpp"

namespace ranrc {

/// State of the robust asynchronous ratio consensus over a fixed graph.
/// Payloads are an n-vector y_i and an n x n matrix z_i per node; the
/// consensus value of interest is the ratio p_i solving z_i p_i = y_i.
///
/// Mass counters: sigma_* is the cumulative (scaled) mass node i has
/// broadcast; rho_*[e] for edge e = (i,j) is the last sigma_i value receiver j
/// has absorbed. The virtual mass parked on edge (i,j) is
/// nu = sigma_i - rho[e]; it is never stored, only derived.
struct RatioState {
  std::vector<Eigen::VectorXd> y;
  std::vector<Eigen::MatrixXd> z;
  std::vector<Eigen::VectorXd> sigma_y;
  std::vector<Eigen::MatrixXd> sigma_z;
  std::vector<Eigen::VectorXd> rho_y;  // indexed by DirectedGraph::edge_index
  std::vector<Eigen::MatrixXd> rho_z;

  int dim() const { return y.empty() ? 0 : static_cast<int>(y.front().size()); }
};

/// Fresh state with y = 0, z = I and zero mass counters, so the conservation
/// identity holds from the start.
RatioState make_ratio_state(const DirectedGraph& g, int dim);

/// As above but with caller-provided initial node masses.
RatioState make_ratio_state(const DirectedGraph& g, std::vector<Eigen::VectorXd> y0,
                            std::vector<Eigen::MatrixXd> z0);

/// Plain push-sum broadcast step: the transmitter scales its mass by
/// 1/(out_degree+1) and every reliable receiver adds the scaled mass. Without
/// the mass counters, a lost packet destroys mass (total sum shrinks); this
/// primitive exists as the lossless baseline.
void pushsum_step(RatioState& state, const DirectedGraph& g, int active_node,
                  const std::vector<int>& reliable);

/// Loss-robust step: the transmitter additionally accumulates its scaled mass
/// into sigma; each reliable receiver absorbs sigma - rho (everything not yet
/// delivered) and syncs rho. Unreliable edges keep their mass parked as
/// nu = sigma - rho. Total node+edge mass is invariant.
void robust_ratio_step(RatioState& state, const DirectedGraph& g, int active_node,
                       const std::vector<int>& reliable);

/// The consensus estimate p_i from z_i p_i = y_i (no positivity guard here;
/// callers wanting the guarded solve use cmax first).
Eigen::VectorXd ratio_estimate(const RatioState& state, int node);

/// One broadcast step written as matrices acting on the stacked node+edge
/// state: S selects the nodes that update this step, M (column-stochastic)
/// moves mass, and T injects per-node drive increments.
struct StepMatrices {
  Eigen::MatrixXd s;  // N x N diagonal 0/1
  Eigen::MatrixXd t;  // (N+E) x N
  Eigen::MatrixXd m;  // (N+E) x (N+E), every column sums to 1
};

/// Builds S, T, M for the given transmitter and set of reliable out-edges.
/// Throws std::invalid_argument if reliable is not a subset of the
/// transmitter's out-neighbors.
StepMatrices build_step_matrices(const DirectedGraph& g, int active_node,
                                 const std::vector<int>& reliable);

/// Node masses stacked over edge masses, one row per node then per edge (in
/// DirectedGraph::edges() order). y is (N+E) x n; z is (N+E) x n^2 with each
/// row a flattened matrix. Applying StepMatrices::m to these blocks evolves
/// the whole consensus step at once.
struct AugmentedState {
  Eigen::MatrixXd y;
  Eigen::MatrixXd z;
};

AugmentedState stack_augmented(const DirectedGraph& g, const RatioState& state);

/// Max-norm violation of the conservation identity
///   sum_i (y_i + sum_edges nu) = g_sum   (and the z/h analogue),
/// where g_sum/h_sum are the totals the caller expects the masses to carry.
struct MassResidual {
  double y = 0.0;
  double z = 0.0;
  double max() const { return y > z ? y : z; }
};

MassResidual mass_residual(const RatioState& state, const DirectedGraph& g,
                           const Eigen::VectorXd& g_sum, const Eigen::MatrixXd& h_sum);

}  // namespace ranrc
