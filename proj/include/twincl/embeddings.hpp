#pragma once

#include <cstdint>
#include <vector>

#include "twincl/graph.hpp"
#include "twincl/matrix.hpp"

namespace twincl {

/// Layer-0 parameters: one d-dimensional row per user, then one per item.
struct EmbeddingTable {
  Index num_users = 0;
  Index num_items = 0;
  Matrix values;

  Index dim() const { return values.cols(); }
  Index num_nodes() const { return values.rows(); }

  bool operator==(const EmbeddingTable&) const = default;
};

/// Xavier-uniform initialization of a (num_users + num_items) x d table,
/// entries drawn from U(-b, b) with b = sqrt(6 / (rows + d)).
EmbeddingTable init_embeddings(Index num_users, Index num_items, Index dim,
                               std::uint64_t seed);

double xavier_bound(Index rows, Index dim);

struct PropagationOutput {
  Matrix z;                      // mean over layers 0..L
  std::vector<Matrix> per_layer; // z^(0..L), only when requested
};

/// z^(l) = adj * z^(l-1); z = mean of z^(0..L).
PropagationOutput propagate(const NormalizedAdjacency& adj, const Matrix& e0,
                            int layers, bool keep_layers = false,
                            bool parallel = true);

/// Adjoint of `propagate` with respect to e0. adj is symmetric, so this is
/// the forward pass applied to the upstream gradient.
Matrix backprop_propagate(const NormalizedAdjacency& adj, const Matrix& dz,
                          int layers, bool parallel = true);

/// Wraps propagation over a fixed graph and counts full passes. A training
/// iteration costs three: forward on theta, forward on phi, backward.
class Propagator {
 public:
  Propagator(const NormalizedAdjacency& adj, int layers, bool parallel = true);

  Matrix forward(const Matrix& e0);
  Matrix backward(const Matrix& dz);

  std::uint64_t calls() const { return calls_; }
  int layers() const { return layers_; }
  const NormalizedAdjacency& adjacency() const { return *adj_; }

 private:
  const NormalizedAdjacency* adj_;
  int layers_;
  bool parallel_;
  std::uint64_t calls_ = 0;
};

/// Primary parameters theta, momentum twin phi. phi never receives gradients.
struct TwinState {
  EmbeddingTable theta;
  EmbeddingTable phi;
  double beta = 0.9;
  std::uint64_t iteration = 0;

  static TwinState from_initial(EmbeddingTable theta0, double beta);
};

/// phi <- beta * phi + (1 - beta) * theta; increments the iteration count.
void twin_update(TwinState& state);

double score(std::span<const double> user, std::span<const double> item);

struct EncoderDivergence {
  double cosine_similarity = 0.0;
  double euclidean_distance = 0.0;
};

/// Cosine similarity and L2 distance between the two tables, each flattened.
EncoderDivergence encoder_divergence(const EmbeddingTable& theta,
                                     const EmbeddingTable& phi);

}  // namespace twincl
