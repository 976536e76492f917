#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "twincl/matrix.hpp"

namespace twincl {

using Edge = std::pair<Index, Index>;  // (user, item), dense indices

/// Bipartite user-item graph. Edges are unique and sorted by (user, item).
struct InteractionGraph {
  Index num_users = 0;
  Index num_items = 0;
  std::vector<Edge> edges;
  std::vector<Index> user_degrees;
  std::vector<Index> item_degrees;

  Index num_nodes() const { return num_users + num_items; }
};

/// Symmetric D^{-1/2} A D^{-1/2} over the (users + items) bipartite
/// adjacency, stored as CSR with column-sorted rows. Users occupy rows
/// [0, num_users), items the rows after them. No self-loops.
struct NormalizedAdjacency {
  Index num_users = 0;
  Index dimension = 0;
  std::vector<Index> row_ptr;
  std::vector<Index> col_idx;
  std::vector<double> values;

  Index nnz() const { return values.size(); }
};

InteractionGraph build_graph(std::span<const Edge> interactions, Index num_users,
                             Index num_items);

NormalizedAdjacency normalized_adjacency(const InteractionGraph& graph);

/// Per-user sorted item lists of the graph's edges.
std::vector<std::vector<Index>> user_item_lists(const InteractionGraph& graph);

}  // namespace twincl
