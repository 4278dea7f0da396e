#include "ranrc/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ranrc/rng.hpp"

namespace ranrc {

DirectedGraph::DirectedGraph(int node_count, std::vector<Edge> edges,
                             std::optional<std::vector<Eigen::Vector2d>> positions)
    : n_(node_count), edges_(std::move(edges)), positions_(std::move(positions)) {
  if (n_ < 1) throw std::invalid_argument("DirectedGraph: node count must be >= 1");
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  out_.resize(n_);
  in_.resize(n_);
  for (const auto& [i, j] : edges_) {
    if (i < 0 || i >= n_ || j < 0 || j >= n_)
      throw std::invalid_argument("DirectedGraph: edge endpoint out of range");
    if (i == j) throw std::invalid_argument("DirectedGraph: self-loops are not allowed");
    out_[i].push_back(j);
    in_[j].push_back(i);
  }
  for (auto& v : out_) std::sort(v.begin(), v.end());
  for (auto& v : in_) std::sort(v.begin(), v.end());
  if (positions_ && static_cast<int>(positions_->size()) != n_)
    throw std::invalid_argument("DirectedGraph: positions size must equal node count");
}

int DirectedGraph::check_node(int i) const {
  if (i < 0 || i >= n_) throw std::out_of_range("DirectedGraph: node index out of range");
  return i;
}

bool DirectedGraph::has_edge(int i, int j) const {
  return std::binary_search(edges_.begin(), edges_.end(), Edge{i, j});
}

int DirectedGraph::edge_index(int i, int j) const {
  const auto it = std::lower_bound(edges_.begin(), edges_.end(), Edge{i, j});
  if (it == edges_.end() || *it != Edge{i, j})
    throw std::out_of_range("DirectedGraph: no such edge");
  return static_cast<int>(it - edges_.begin());
}

DirectedGraph generate_random_geometric(int n, double radius, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate_random_geometric: n must be >= 1");
  if (radius <= 0.0) throw std::invalid_argument("generate_random_geometric: radius must be > 0");
  Rng rng(seed);
  std::vector<Eigen::Vector2d> pos(n);
  for (auto& p : pos) {
    p.x() = rng.uniform();
    p.y() = rng.uniform();
  }
  std::vector<DirectedGraph::Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((pos[i] - pos[j]).norm() <= radius) {
        edges.emplace_back(i, j);
        edges.emplace_back(j, i);
      }
  return DirectedGraph(n, std::move(edges), std::move(pos));
}

DirectedGraph generate_connected_geometric(int n, double radius, std::uint64_t seed,
                                           int max_attempts) {
  // One engine drives all attempts, so the result is still a pure function of
  // (n, radius, seed).
  Rng rng(seed);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<Eigen::Vector2d> pos(n);
    for (auto& p : pos) {
      p.x() = rng.uniform();
      p.y() = rng.uniform();
    }
    std::vector<DirectedGraph::Edge> edges;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if ((pos[i] - pos[j]).norm() <= radius) {
          edges.emplace_back(i, j);
          edges.emplace_back(j, i);
        }
    DirectedGraph g(n, std::move(edges), std::move(pos));
    if (is_strongly_connected(g)) return g;
  }
  throw std::runtime_error("generate_connected_geometric: no strongly connected graph within " +
                           std::to_string(max_attempts) + " attempts");
}

namespace {

// Nodes reachable from `start` following edges through `next`.
int count_reachable(const DirectedGraph& g, int start,
                    const std::vector<int>& (DirectedGraph::*next)(int) const) {
  std::vector<char> seen(g.node_count(), 0);
  std::vector<int> stack{start};
  seen[start] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : (g.*next)(v))
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
  }
  return count;
}

}  // namespace

bool is_strongly_connected(const DirectedGraph& g) {
  const int n = g.node_count();
  if (n == 1) return true;
  return count_reachable(g, 0, &DirectedGraph::out_neighbors) == n &&
         count_reachable(g, 0, &DirectedGraph::in_neighbors) == n;
}

void write_edge_list(const DirectedGraph& g, std::ostream& out) {
  out << g.node_count() << "\n";
  for (const auto& [i, j] : g.edges()) out << i << " " << j << "\n";
  if (g.positions()) {
    const auto& pos = *g.positions();
    char buf[64];
    for (int i = 0; i < g.node_count(); ++i) {
      out << i;
      for (double c : {pos[i].x(), pos[i].y()}) {
        auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), c);
        out << " " << std::string_view(buf, end - buf);
      }
      out << "\n";
    }
  }
}

DirectedGraph read_edge_list(std::istream& in) {
  int n = 0;
  if (!(in >> n)) throw std::runtime_error("read_edge_list: missing node count");
  std::string line;
  std::getline(in, line);  // rest of the first line
  std::vector<DirectedGraph::Edge> edges;
  std::vector<Eigen::Vector2d> pos(n, Eigen::Vector2d::Zero());
  bool has_positions = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<double> tok;
    double v;
    while (ls >> v) tok.push_back(v);
    if (tok.empty()) continue;
    if (tok.size() == 2) {
      edges.emplace_back(static_cast<int>(tok[0]), static_cast<int>(tok[1]));
    } else if (tok.size() == 3) {
      const int i = static_cast<int>(tok[0]);
      if (i < 0 || i >= n) throw std::runtime_error("read_edge_list: position index out of range");
      pos[i] = Eigen::Vector2d(tok[1], tok[2]);
      has_positions = true;
    } else {
      throw std::runtime_error("read_edge_list: malformed line: " + line);
    }
  }
  if (has_positions) return DirectedGraph(n, std::move(edges), std::move(pos));
  return DirectedGraph(n, std::move(edges));
}

void save_edge_list(const DirectedGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_edge_list: cannot open " + path);
  write_edge_list(g, out);
}

DirectedGraph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_edge_list: cannot open " + path);
  return read_edge_list(in);
}

}  // namespace ranrc
