#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ranrc {

/// Fixed directed communication topology. Edge (i,j) means node j can receive
/// from node i. Immutable after construction; safe to share across threads.
class DirectedGraph {
 public:
  using Edge = std::pair<int, int>;

  DirectedGraph(int node_count, std::vector<Edge> edges,
                std::optional<std::vector<Eigen::Vector2d>> positions = std::nullopt);

  int node_count() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }

  /// Edges sorted lexicographically; the position of an edge in this list is
  /// its index in every edge-indexed quantity (virtual masses, step matrices).
  const std::vector<Edge>& edges() const { return edges_; }

  const std::vector<int>& out_neighbors(int i) const { return out_[check_node(i)]; }
  const std::vector<int>& in_neighbors(int i) const { return in_[check_node(i)]; }
  int out_degree(int i) const { return static_cast<int>(out_neighbors(i).size()); }

  bool has_edge(int i, int j) const;
  int edge_index(int i, int j) const;  // throws std::out_of_range if absent

  const std::optional<std::vector<Eigen::Vector2d>>& positions() const { return positions_; }

 private:
  int check_node(int i) const;

  int n_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
  std::optional<std::vector<Eigen::Vector2d>> positions_;
};

/// Random geometric graph: nodes i.i.d. uniform in the unit square, both
/// directed edges present iff the Euclidean distance is <= radius. Pure
/// function of (n, radius, seed). Connectivity is the caller's concern.
DirectedGraph generate_random_geometric(int n, double radius, std::uint64_t seed);

/// Resamples generate_random_geometric (continuing the same seeded stream)
/// until the graph is strongly connected; throws std::runtime_error after
/// max_attempts failures.
DirectedGraph generate_connected_geometric(int n, double radius, std::uint64_t seed,
                                           int max_attempts = 1000);

/// True iff every node reaches every other along directed edges.
bool is_strongly_connected(const DirectedGraph& g);

/// Plain-text serialization: first line `n`, one `i j` line per edge, then
/// optional `i x y` position lines.
void write_edge_list(const DirectedGraph& g, std::ostream& out);
DirectedGraph read_edge_list(std::istream& in);

void save_edge_list(const DirectedGraph& g, const std::string& path);
DirectedGraph load_edge_list(const std::string& path);

}  // namespace ranrc
