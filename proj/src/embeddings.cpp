#include "twincl/embeddings.hpp"

#include <cmath>
#include <random>

#include "twincl/kernels.hpp"

namespace twincl {

double xavier_bound(Index rows, Index dim) {
  return std::sqrt(6.0 / static_cast<double>(rows + dim));
}

EmbeddingTable init_embeddings(Index num_users, Index num_items, Index dim,
                               std::uint64_t seed) {
  if (dim == 0) throw Error("embedding dimension must be at least 1");
  EmbeddingTable table;
  table.num_users = num_users;
  table.num_items = num_items;
  table.values = Matrix(num_users + num_items, dim);
  const double bound = xavier_bound(num_users + num_items, dim);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& x : table.values.flat()) x = dist(rng);
  return table;
}

namespace {

void check_layers(int layers) {
  if (layers < 0) throw Error("layer count must be non-negative");
}

}  // namespace

PropagationOutput propagate(const NormalizedAdjacency& adj, const Matrix& e0,
                            int layers, bool keep_layers, bool parallel) {
  check_layers(layers);
  if (e0.rows() != adj.dimension)
    throw Error("propagate: table has " + std::to_string(e0.rows()) +
                " rows, graph has " + std::to_string(adj.dimension) + " nodes");
  PropagationOutput out;
  out.z = e0;
  if (keep_layers) out.per_layer.push_back(e0);
  if (layers == 0) return out;

  Matrix current = e0;
  Matrix next(e0.rows(), e0.cols());
  for (int l = 1; l <= layers; ++l) {
    if (parallel) {
      kernels::spmm_parallel(adj, current, next);
      kernels::accumulate_parallel(next, out.z);
    } else {
      kernels::spmm_serial(adj, current, next);
      kernels::accumulate_serial(next, out.z);
    }
    if (keep_layers) out.per_layer.push_back(next);
    std::swap(current, next);
  }
  const double inv = 1.0 / static_cast<double>(layers + 1);
  for (double& x : out.z.flat()) x *= inv;
  return out;
}

Matrix backprop_propagate(const NormalizedAdjacency& adj, const Matrix& dz,
                          int layers, bool parallel) {
  return propagate(adj, dz, layers, false, parallel).z;
}

Propagator::Propagator(const NormalizedAdjacency& adj, int layers, bool parallel)
    : adj_(&adj), layers_(layers), parallel_(parallel) {
  check_layers(layers);
}

Matrix Propagator::forward(const Matrix& e0) {
  ++calls_;
  return propagate(*adj_, e0, layers_, false, parallel_).z;
}

Matrix Propagator::backward(const Matrix& dz) {
  ++calls_;
  return backprop_propagate(*adj_, dz, layers_, parallel_);
}

TwinState TwinState::from_initial(EmbeddingTable theta0, double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) throw Error("momentum beta must lie in [0, 1)");
  TwinState s;
  s.phi = theta0;
  s.theta = std::move(theta0);
  s.beta = beta;
  return s;
}

void twin_update(TwinState& state) {
  auto phi = state.phi.values.flat();
  auto theta = state.theta.values.flat();
  if (phi.size() != theta.size()) throw Error("twin_update: shape mismatch");
  const double b = state.beta;
  for (Index k = 0; k < phi.size(); ++k) phi[k] = b * phi[k] + (1.0 - b) * theta[k];
  ++state.iteration;
}

double score(std::span<const double> user, std::span<const double> item) {
  if (user.size() != item.size()) throw Error("score: dimension mismatch");
  return dot(user, item);
}

EncoderDivergence encoder_divergence(const EmbeddingTable& theta,
                                     const EmbeddingTable& phi) {
  auto a = theta.values.flat();
  auto b = phi.values.flat();
  if (a.size() != b.size() || theta.dim() != phi.dim())
    throw Error("encoder_divergence: shape mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0, dd = 0.0;
  for (Index k = 0; k < a.size(); ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
    const double diff = a[k] - b[k];
    dd += diff * diff;
  }
  if (aa == 0.0 || bb == 0.0)
    throw Error("encoder_divergence: cosine undefined for a zero-norm table");
  return {ab / (std::sqrt(aa) * std::sqrt(bb)), std::sqrt(dd)};
}

}  // namespace twincl
