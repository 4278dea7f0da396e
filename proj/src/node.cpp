#include "ranrc/node.hpp"

#include <Eigen/Dense>
#include <stdexcept>

namespace ranrc {

NodeState make_node(int id, const Eigen::VectorXd& x0, const std::vector<int>& in_neighbors) {
  const int n = static_cast<int>(x0.size());
  NodeState s;
  s.id = id;
  s.x = x0;
  s.y = Eigen::VectorXd::Zero(n);
  s.g = Eigen::VectorXd::Zero(n);
  s.g_old = Eigen::VectorXd::Zero(n);
  s.z = Eigen::MatrixXd::Identity(n, n);
  s.h = Eigen::MatrixXd::Identity(n, n);
  s.h_old = Eigen::MatrixXd::Identity(n, n);
  s.sigma_y = Eigen::VectorXd::Zero(n);
  s.sigma_z = Eigen::MatrixXd::Zero(n, n);
  for (int j : in_neighbors) {
    s.rho_y[j] = Eigen::VectorXd::Zero(n);
    s.rho_z[j] = Eigen::MatrixXd::Zero(n, n);
  }
  return s;
}

std::vector<NodeState> init_network(const DirectedGraph& g, const Eigen::VectorXd& x0) {
  std::vector<NodeState> net;
  net.reserve(g.node_count());
  for (int i = 0; i < g.node_count(); ++i) net.push_back(make_node(i, x0, g.in_neighbors(i)));
  return net;
}

Eigen::MatrixXd cmax(const Eigen::MatrixXd& z, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("cmax: c must be > 0");
  const double asym = (z - z.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9 * (1.0 + z.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("cmax: input matrix is not symmetric");
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(z, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() >= c) return z;
  return c * Eigen::MatrixXd::Identity(z.rows(), z.cols());
}

void estimate_update(NodeState& s, const CostModel& model, double epsilon, double c,
                     DescentVariant variant) {
  if (epsilon < 0.0) throw std::invalid_argument("estimate_update: epsilon must be >= 0");
  const Eigen::MatrixXd guarded = cmax(s.z, c);
  const Eigen::LLT<Eigen::MatrixXd> llt(guarded);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("estimate_update: guarded descent matrix is not positive definite");
  s.x = (1.0 - epsilon) * s.x + epsilon * llt.solve(s.y);
  s.g_old = s.g;
  s.h_old = s.h;
  s.h = local_h(model, s.x, variant);
  s.g = s.h * s.x - model.gradient(s.x);
  s.y += s.g - s.g_old;
  s.z += s.h - s.h_old;
  s.flag_update = false;
  s.flag_trans = true;
}

Message data_transmission(NodeState& s, int out_degree) {
  const double scale = 1.0 / (out_degree + 1);
  s.y *= scale;
  s.z *= scale;
  s.sigma_y += s.y;
  s.sigma_z += s.z;
  s.flag_trans = false;
  return Message{s.id, s.sigma_y, s.sigma_z};
}

void data_reception(NodeState& s, const Message& m) {
  const auto it = s.rho_y.find(m.transmitter);
  if (it == s.rho_y.end())
    throw std::invalid_argument("data_reception: message from node " +
                                std::to_string(m.transmitter) +
                                " which is not an in-neighbor of node " + std::to_string(s.id));
  s.y += m.sigma_y - it->second;
  s.z += m.sigma_z - s.rho_z[m.transmitter];
  it->second = m.sigma_y;
  s.rho_z[m.transmitter] = m.sigma_z;
  s.flag_rec = false;
  s.flag_update = true;
}

void broadcast_round(std::vector<NodeState>& net, const DirectedGraph& g, int active_node,
                     const std::vector<int>& reliable,
                     const std::vector<std::shared_ptr<const CostModel>>& models, double epsilon,
                     double c, DescentVariant variant) {
  if (active_node < 0 || active_node >= g.node_count())
    throw std::out_of_range("broadcast_round: active node out of range");
  if (net.size() != static_cast<std::size_t>(g.node_count()) || models.size() != net.size())
    throw std::invalid_argument("broadcast_round: one state and one model per node required");

  NodeState& tx = net[active_node];
  tx.flag_update = true;
  estimate_update(tx, *models[active_node], epsilon, c, variant);
  const Message msg = data_transmission(tx, g.out_degree(active_node));

  std::vector<int> receivers = reliable;
  std::sort(receivers.begin(), receivers.end());
  for (int j : receivers) {
    if (!g.has_edge(active_node, j))
      throw std::invalid_argument("broadcast_round: reliable set not a subset of out-neighbors");
    net[j].flag_rec = true;
    data_reception(net[j], msg);
    estimate_update(net[j], *models[j], epsilon, c, variant);
  }
}

AugmentedState stack_augmented(const DirectedGraph& g, const std::vector<NodeState>& net) {
  const int n = g.node_count();
  const int ne = g.edge_count();
  const int dim = static_cast<int>(net.front().x.size());
  AugmentedState a;
  a.y.resize(n + ne, dim);
  a.z.resize(n + ne, dim * dim);
  for (int v = 0; v < n; ++v) {
    a.y.row(v) = net[v].y.transpose();
    a.z.row(v) = Eigen::Map<const Eigen::RowVectorXd>(net[v].z.data(), dim * dim);
  }
  for (int e = 0; e < ne; ++e) {
    const auto& [src, dst] = g.edges()[e];
    a.y.row(n + e) = (net[src].sigma_y - net[dst].rho_y.at(src)).transpose();
    const Eigen::MatrixXd nu_z = net[src].sigma_z - net[dst].rho_z.at(src);
    a.z.row(n + e) = Eigen::Map<const Eigen::RowVectorXd>(nu_z.data(), dim * dim);
  }
  return a;
}

MassResidual mass_residual(const std::vector<NodeState>& net, const DirectedGraph& g) {
  const int dim = static_cast<int>(net.front().x.size());
  Eigen::VectorXd total_y = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd total_z = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd g_sum = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd h_sum = Eigen::MatrixXd::Zero(dim, dim);
  for (const NodeState& s : net) {
    total_y += s.y;
    total_z += s.z;
    g_sum += s.g;
    h_sum += s.h;
  }
  for (const auto& [src, dst] : g.edges()) {
    total_y += net[src].sigma_y - net[dst].rho_y.at(src);
    total_z += net[src].sigma_z - net[dst].rho_z.at(src);
  }
  MassResidual r;
  r.y = (total_y - g_sum).cwiseAbs().maxCoeff();
  r.z = (total_z - h_sum).cwiseAbs().maxCoeff();
  return r;
}

}  // namespace ranrc
