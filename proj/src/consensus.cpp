#include "ranrc/consensus.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>

namespace ranrc {

namespace {

void check_step_args(const DirectedGraph& g, int active_node, const std::vector<int>& reliable) {
  if (active_node < 0 || active_node >= g.node_count())
    throw std::out_of_range("consensus step: active node out of range");
  const auto& out = g.out_neighbors(active_node);
  for (int j : reliable)
    if (!std::binary_search(out.begin(), out.end(), j))
      throw std::invalid_argument("consensus step: reliable set not a subset of out-neighbors");
}

}  // namespace

RatioState make_ratio_state(const DirectedGraph& g, int dim) {
  std::vector<Eigen::VectorXd> y0(g.node_count(), Eigen::VectorXd::Zero(dim));
  std::vector<Eigen::MatrixXd> z0(g.node_count(), Eigen::MatrixXd::Identity(dim, dim));
  return make_ratio_state(g, std::move(y0), std::move(z0));
}

RatioState make_ratio_state(const DirectedGraph& g, std::vector<Eigen::VectorXd> y0,
                            std::vector<Eigen::MatrixXd> z0) {
  if (static_cast<int>(y0.size()) != g.node_count() ||
      static_cast<int>(z0.size()) != g.node_count())
    throw std::invalid_argument("make_ratio_state: one initial mass per node required");
  RatioState s;
  const int dim = static_cast<int>(y0.front().size());
  s.y = std::move(y0);
  s.z = std::move(z0);
  s.sigma_y.assign(g.node_count(), Eigen::VectorXd::Zero(dim));
  s.sigma_z.assign(g.node_count(), Eigen::MatrixXd::Zero(dim, dim));
  s.rho_y.assign(g.edge_count(), Eigen::VectorXd::Zero(dim));
  s.rho_z.assign(g.edge_count(), Eigen::MatrixXd::Zero(dim, dim));
  return s;
}

void pushsum_step(RatioState& state, const DirectedGraph& g, int active_node,
                  const std::vector<int>& reliable) {
  check_step_args(g, active_node, reliable);
  const double scale = 1.0 / (g.out_degree(active_node) + 1);
  state.y[active_node] *= scale;
  state.z[active_node] *= scale;
  for (int j : reliable) {
    state.y[j] += state.y[active_node];
    state.z[j] += state.z[active_node];
  }
}

void robust_ratio_step(RatioState& state, const DirectedGraph& g, int active_node,
                       const std::vector<int>& reliable) {
  check_step_args(g, active_node, reliable);
  const int i = active_node;
  const double scale = 1.0 / (g.out_degree(i) + 1);
  state.y[i] *= scale;
  state.z[i] *= scale;
  state.sigma_y[i] += state.y[i];
  state.sigma_z[i] += state.z[i];
  for (int j : reliable) {
    const int e = g.edge_index(i, j);
    state.y[j] += state.sigma_y[i] - state.rho_y[e];
    state.z[j] += state.sigma_z[i] - state.rho_z[e];
    state.rho_y[e] = state.sigma_y[i];
    state.rho_z[e] = state.sigma_z[i];
  }
}

Eigen::VectorXd ratio_estimate(const RatioState& state, int node) {
  return state.z[node].partialPivLu().solve(state.y[node]);
}

StepMatrices build_step_matrices(const DirectedGraph& g, int active_node,
                                 const std::vector<int>& reliable) {
  check_step_args(g, active_node, reliable);
  const int n = g.node_count();
  const int ne = g.edge_count();
  const int i = active_node;
  const double scale = 1.0 / (g.out_degree(i) + 1);

  StepMatrices sm;
  sm.s = Eigen::MatrixXd::Zero(n, n);
  sm.t = Eigen::MatrixXd::Zero(n + ne, n);
  sm.m = Eigen::MatrixXd::Zero(n + ne, n + ne);

  sm.s(i, i) = 1.0;
  for (int j : reliable) sm.s(j, j) = 1.0;

  // Node block: the transmitter keeps its scaled mass, reliable receivers add
  // it, everyone else is untouched.
  sm.m(i, i) = scale;
  for (int h = 0; h < n; ++h)
    if (h != i) sm.m(h, h) = 1.0;
  for (int j : reliable) sm.m(j, i) = scale;

  // Edge rows/columns. A delivered edge flushes its parked mass into the
  // receiver; a lost edge keeps it and accumulates the transmitter's share.
  for (const auto& [src, dst] : g.edges()) {
    const int e = n + g.edge_index(src, dst);
    if (src != i) {
      sm.m(e, e) = 1.0;
      continue;
    }
    const bool delivered = std::find(reliable.begin(), reliable.end(), dst) != reliable.end();
    if (delivered) {
      sm.m(dst, e) = 1.0;
    } else {
      sm.m(e, e) = 1.0;
      sm.m(e, i) = scale;
      sm.t(e, i) = scale;
    }
  }

  // Drive block: the transmitter's increment enters scaled (it is folded in
  // before the broadcast division), each reliable receiver's enters whole.
  sm.t(i, i) = scale;
  for (int j : reliable) {
    sm.t(j, i) = scale;
    sm.t(j, j) = 1.0;
  }
  return sm;
}

AugmentedState stack_augmented(const DirectedGraph& g, const RatioState& state) {
  const int n = g.node_count();
  const int ne = g.edge_count();
  const int dim = state.dim();
  AugmentedState a;
  a.y.resize(n + ne, dim);
  a.z.resize(n + ne, dim * dim);
  for (int v = 0; v < n; ++v) {
    a.y.row(v) = state.y[v].transpose();
    a.z.row(v) = Eigen::Map<const Eigen::RowVectorXd>(state.z[v].data(), dim * dim);
  }
  for (int e = 0; e < ne; ++e) {
    const auto& [src, dst] = g.edges()[e];
    a.y.row(n + e) = (state.sigma_y[src] - state.rho_y[e]).transpose();
    const Eigen::MatrixXd nu_z = state.sigma_z[src] - state.rho_z[e];
    a.z.row(n + e) = Eigen::Map<const Eigen::RowVectorXd>(nu_z.data(), dim * dim);
  }
  return a;
}

MassResidual mass_residual(const RatioState& state, const DirectedGraph& g,
                           const Eigen::VectorXd& g_sum, const Eigen::MatrixXd& h_sum) {
  const int dim = state.dim();
  Eigen::VectorXd total_y = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd total_z = Eigen::MatrixXd::Zero(dim, dim);
  for (int v = 0; v < g.node_count(); ++v) {
    total_y += state.y[v];
    total_z += state.z[v];
  }
  for (int e = 0; e < g.edge_count(); ++e) {
    const int src = g.edges()[e].first;
    total_y += state.sigma_y[src] - state.rho_y[e];
    total_z += state.sigma_z[src] - state.rho_z[e];
  }
  MassResidual r;
  r.y = (total_y - g_sum).cwiseAbs().maxCoeff();
  r.z = (total_z - h_sum).cwiseAbs().maxCoeff();
  return r;
}

}  // namespace ranrc
