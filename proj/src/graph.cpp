#include "twincl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace twincl {

InteractionGraph build_graph(std::span<const Edge> interactions, Index num_users,
                             Index num_items) {
  if (interactions.empty()) throw Error("empty graph");
  InteractionGraph g;
  g.num_users = num_users;
  g.num_items = num_items;
  g.edges.assign(interactions.begin(), interactions.end());
  for (const auto& [u, i] : g.edges) {
    if (u >= num_users || i >= num_items) {
      throw Error("edge (" + std::to_string(u) + ", " + std::to_string(i) +
                  ") out of range for " + std::to_string(num_users) + " users, " +
                  std::to_string(num_items) + " items");
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());

  g.user_degrees.assign(num_users, 0);
  g.item_degrees.assign(num_items, 0);
  for (const auto& [u, i] : g.edges) {
    ++g.user_degrees[u];
    ++g.item_degrees[i];
  }
  return g;
}

NormalizedAdjacency normalized_adjacency(const InteractionGraph& graph) {
  NormalizedAdjacency adj;
  adj.num_users = graph.num_users;
  adj.dimension = graph.num_nodes();

  std::vector<Index> row_len(adj.dimension, 0);
  for (Index u = 0; u < graph.num_users; ++u) row_len[u] = graph.user_degrees[u];
  for (Index i = 0; i < graph.num_items; ++i)
    row_len[graph.num_users + i] = graph.item_degrees[i];

  adj.row_ptr.assign(adj.dimension + 1, 0);
  for (Index r = 0; r < adj.dimension; ++r)
    adj.row_ptr[r + 1] = adj.row_ptr[r] + row_len[r];

  const Index nnz = adj.row_ptr.back();
  if (nnz != 2 * graph.edges.size())
    throw Error("normalized_adjacency: degree arrays inconsistent with edges");
  adj.col_idx.resize(nnz);
  adj.values.resize(nnz);

  // Edges are sorted by (user, item), so user rows fill column-sorted. Item
  // rows receive users in ascending order for the same reason.
  std::vector<Index> cursor(adj.row_ptr.begin(), adj.row_ptr.end() - 1);
  for (const auto& [u, i] : graph.edges) {
    const Index du = graph.user_degrees[u];
    const Index di = graph.item_degrees[i];
    if (du == 0 || di == 0)
      throw Error("normalized_adjacency: edge endpoint with zero degree");
    const double w = 1.0 / std::sqrt(static_cast<double>(du) * static_cast<double>(di));
    const Index item_node = graph.num_users + i;

    adj.col_idx[cursor[u]] = item_node;
    adj.values[cursor[u]++] = w;
    adj.col_idx[cursor[item_node]] = u;
    adj.values[cursor[item_node]++] = w;
  }
  return adj;
}

std::vector<std::vector<Index>> user_item_lists(const InteractionGraph& graph) {
  std::vector<std::vector<Index>> lists(graph.num_users);
  for (Index u = 0; u < graph.num_users; ++u) lists[u].reserve(graph.user_degrees[u]);
  for (const auto& [u, i] : graph.edges) lists[u].push_back(i);
  return lists;
}

}  // namespace twincl
