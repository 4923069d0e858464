#include "rgm/graph.hpp"

#include <algorithm>
#include <cmath>

#include "rgm/error.hpp"

namespace rgm {

std::size_t pair_index(std::size_t p, std::size_t i, std::size_t j) {
  if (i > j) std::swap(i, j);
  if (i == j || j >= p) throw Error(ErrorCategory::domain, "invalid node pair");
  // Pairs before row i: sum_{r<i} (p-1-r).
  return i * (2 * p - i - 1) / 2 + (j - i - 1);
}

std::pair<std::size_t, std::size_t> pair_nodes(std::size_t p, std::size_t index) {
  std::size_t i = 0;
  std::size_t row_len = p - 1;
  while (index >= row_len) {
    index -= row_len;
    ++i;
    --row_len;
  }
  return {i, i + 1 + index};
}

void Graph::set_edge(std::size_t i, std::size_t j, bool present) {
  if (i == j) throw Error(ErrorCategory::domain, "self-loops are not allowed");
  const std::uint8_t v = present ? 1 : 0;
  adj_[i * p_ + j] = v;
  adj_[j * p_ + i] = v;
}

std::size_t Graph::edge_count() const {
  return static_cast<std::size_t>(std::count(adj_.begin(), adj_.end(), std::uint8_t{1})) / 2;
}

std::vector<std::size_t> Graph::neighbors(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < p_; ++j)
    if (adj_[i * p_ + j]) out.push_back(j);
  return out;
}

Graph Graph::complete(std::size_t p) {
  Graph g(p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) g.set_edge(i, j, true);
  return g;
}

GraphEnsemble empty_ensemble(std::size_t environments, std::size_t p) {
  return GraphEnsemble(environments, Graph(p));
}

}  // namespace rgm
