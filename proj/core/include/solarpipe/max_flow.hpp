#pragma once

#include <cstdint>
#include <vector>

namespace solarpipe {

// Dinic max-flow on a directed graph with integer capacities.  Capacities
// are exact (no floating point), so min-cut values are reproducible across
// platforms.  Nodes are 0-based; add_edge inserts a forward edge of the
// given capacity and a residual reverse edge of capacity 0.
class MaxFlow {
 public:
  explicit MaxFlow(int node_count);

  // returns the edge id of the forward edge (its reverse is id ^ 1)
  int add_edge(int from, int to, std::int64_t capacity);

  std::int64_t solve(int source, int sink);

  // After solve: true if `node` is reachable from the source in the residual
  // graph, i.e. it lies on the source side of a minimum cut.
  bool on_source_side(int node) const;

  int node_count() const { return static_cast<int>(graph_.size()); }

  // remaining capacity of edge `id`
  std::int64_t residual(int id) const { return edges_[id].capacity; }

 private:
  struct Edge {
    int to;
    std::int64_t capacity;
  };

  bool bfs(int source, int sink);
  std::int64_t dfs(int node, int sink, std::int64_t limit);

  std::vector<Edge> edges_;
  std::vector<std::vector<int>> graph_;  // node -> edge ids
  std::vector<int> level_;
  std::vector<int> iter_;
};

}  // namespace solarpipe
