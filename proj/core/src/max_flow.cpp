#include "solarpipe/max_flow.hpp"

#include <limits>
#include <queue>
#include <stdexcept>

namespace solarpipe {

MaxFlow::MaxFlow(int node_count) {
  if (node_count < 2) throw std::invalid_argument("MaxFlow: need at least 2 nodes");
  graph_.resize(static_cast<std::size_t>(node_count));
}

int MaxFlow::add_edge(int from, int to, std::int64_t capacity) {
  if (from < 0 || from >= node_count() || to < 0 || to >= node_count())
    throw std::invalid_argument("MaxFlow: edge endpoint out of range");
  if (capacity < 0) throw std::invalid_argument("MaxFlow: negative capacity");
  int id = static_cast<int>(edges_.size());
  graph_[static_cast<std::size_t>(from)].push_back(id);
  edges_.push_back({to, capacity});
  graph_[static_cast<std::size_t>(to)].push_back(id + 1);
  edges_.push_back({from, 0});
  return id;
}

bool MaxFlow::bfs(int source, int sink) {
  level_.assign(graph_.size(), -1);
  std::queue<int> q;
  level_[static_cast<std::size_t>(source)] = 0;
  q.push(source);
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (int id : graph_[static_cast<std::size_t>(v)]) {
      const Edge& e = edges_[static_cast<std::size_t>(id)];
      if (e.capacity > 0 && level_[static_cast<std::size_t>(e.to)] < 0) {
        level_[static_cast<std::size_t>(e.to)] = level_[static_cast<std::size_t>(v)] + 1;
        q.push(e.to);
      }
    }
  }
  return level_[static_cast<std::size_t>(sink)] >= 0;
}

std::int64_t MaxFlow::dfs(int node, int sink, std::int64_t limit) {
  if (node == sink) return limit;
  auto& edge_ids = graph_[static_cast<std::size_t>(node)];
  for (int& i = iter_[static_cast<std::size_t>(node)]; i < static_cast<int>(edge_ids.size());
       ++i) {
    int id = edge_ids[static_cast<std::size_t>(i)];
    Edge& e = edges_[static_cast<std::size_t>(id)];
    if (e.capacity <= 0 ||
        level_[static_cast<std::size_t>(e.to)] != level_[static_cast<std::size_t>(node)] + 1)
      continue;
    std::int64_t pushed = dfs(e.to, sink, std::min(limit, e.capacity));
    if (pushed > 0) {
      e.capacity -= pushed;
      edges_[static_cast<std::size_t>(id ^ 1)].capacity += pushed;
      return pushed;
    }
  }
  return 0;
}

std::int64_t MaxFlow::solve(int source, int sink) {
  if (source == sink) throw std::invalid_argument("MaxFlow: source equals sink");
  std::int64_t flow = 0;
  while (bfs(source, sink)) {
    iter_.assign(graph_.size(), 0);
    std::int64_t pushed;
    while ((pushed = dfs(source, sink, std::numeric_limits<std::int64_t>::max())) > 0)
      flow += pushed;
  }
  return flow;
}

bool MaxFlow::on_source_side(int node) const {
  return level_[static_cast<std::size_t>(node)] >= 0;
}

}  // namespace solarpipe
