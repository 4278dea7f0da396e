#pragma once

#include <Eigen/Core>
#include <map>
#include <memory>
#include <vector>

#include "ranrc/consensus.hpp"
#include "ranrc/costs.hpp"
#include "ranrc/graph.hpp"

namespace ranrc {

/// Per-node state of the robust asynchronous Newton-Raphson consensus.
/// x is the local estimate of the global minimizer; y/z are the consensus
/// masses tracking sum_j g_j and sum_j h_j; sigma/rho are the send/receive
/// mass counters that make the consensus packet-loss proof.
struct NodeState {
  int id = -1;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::MatrixXd z;
  Eigen::VectorXd g, g_old;
  Eigen::MatrixXd h, h_old;
  Eigen::VectorXd sigma_y;
  Eigen::MatrixXd sigma_z;
  std::map<int, Eigen::VectorXd> rho_y;  // keyed by in-neighbor id
  std::map<int, Eigen::MatrixXd> rho_z;
  // Event-trigger flags. The broadcast driver invokes the blocks directly, so
  // these only mirror what an event-triggered deployment would consult.
  bool flag_trans = true;
  bool flag_rec = false;
  bool flag_update = false;
};

/// What a transmission carries: the sender's identity and cumulative masses.
struct Message {
  int transmitter = -1;
  Eigen::VectorXd sigma_y;
  Eigen::MatrixXd sigma_z;
};

/// One node in its startup state: x = x0, y = 0, z = h = h_old = I, zero
/// counters, transmission armed.
NodeState make_node(int id, const Eigen::VectorXd& x0, const std::vector<int>& in_neighbors);

/// All nodes of a graph initialized with a common x0.
std::vector<NodeState> init_network(const DirectedGraph& g, const Eigen::VectorXd& x0);

/// Positivity guard for the descent matrix: returns z unchanged when its
/// minimum eigenvalue is at least c, and c*I otherwise (whole-matrix
/// replacement, not eigenvalue clipping). Throws on non-symmetric input.
Eigen::MatrixXd cmax(const Eigen::MatrixXd& z, double c);

/// Descent block: x <- (1-eps) x + eps * cmax(z,c)^{-1} y (by linear solve),
/// then refresh (g, h) at the new x and fold the increments into (y, z) so the
/// consensus masses keep tracking the current sums.
void estimate_update(NodeState& s, const CostModel& model, double epsilon, double c,
                     DescentVariant variant);

/// Transmission block: scale y, z by 1/(out_degree+1), accumulate them into
/// the sigma counters, and emit the broadcast message.
Message data_transmission(NodeState& s, int out_degree);

/// Reception block: absorb everything the transmitter has sent that this node
/// has not yet seen (sigma - rho), then sync rho. Re-delivering an already
/// absorbed sigma adds exactly zero. Throws if the sender is not an
/// in-neighbor.
void data_reception(NodeState& s, const Message& m);

/// One asymmetric-broadcast iteration: the active node runs estimate_update
/// then data_transmission; each reliable receiver (ascending id) runs
/// data_reception then estimate_update. Receivers touch disjoint state, so
/// the fixed order only pins determinism.
void broadcast_round(std::vector<NodeState>& net, const DirectedGraph& g, int active_node,
                     const std::vector<int>& reliable,
                     const std::vector<std::shared_ptr<const CostModel>>& models, double epsilon,
                     double c, DescentVariant variant);

/// Stacked (y, nu_y) / (z, nu_z) of a whole network, for checking a round
/// against its matrix form.
AugmentedState stack_augmented(const DirectedGraph& g, const std::vector<NodeState>& net);

/// Conservation check for a network: node masses plus parked edge masses must
/// equal the sums of the stored g (resp. h) variables.
MassResidual mass_residual(const std::vector<NodeState>& net, const DirectedGraph& g);

}  // namespace ranrc
