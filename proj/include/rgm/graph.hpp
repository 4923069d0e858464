#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace rgm {

inline std::size_t num_pairs(std::size_t p) { return p * (p - 1) / 2; }

// Index of the unordered pair {i, j}, i != j, in row-major upper-triangle
// order: (0,1), (0,2), ..., (0,p-1), (1,2), ...
std::size_t pair_index(std::size_t p, std::size_t i, std::size_t j);
std::pair<std::size_t, std::size_t> pair_nodes(std::size_t p, std::size_t index);

// Undirected simple graph on p nodes.
class Graph {
 public:
  Graph() = default;
  explicit Graph(std::size_t p) : p_(p), adj_(p * p, 0) {}

  std::size_t size() const { return p_; }
  bool has_edge(std::size_t i, std::size_t j) const { return adj_[i * p_ + j] != 0; }
  void set_edge(std::size_t i, std::size_t j, bool present);
  void toggle(std::size_t i, std::size_t j) { set_edge(i, j, !has_edge(i, j)); }

  std::size_t edge_count() const;
  std::vector<std::size_t> neighbors(std::size_t i) const;
  bool is_complete() const { return edge_count() == num_pairs(p_); }

  static Graph complete(std::size_t p);

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::size_t p_ = 0;
  std::vector<std::uint8_t> adj_;
};

// One graph per environment, all on the same node set.
using GraphEnsemble = std::vector<Graph>;

GraphEnsemble empty_ensemble(std::size_t environments, std::size_t p);

}  // namespace rgm
