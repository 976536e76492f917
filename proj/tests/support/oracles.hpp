#pragma once

// Independent reference implementations and generators shared by the tests.
// Nothing here calls the library code it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "twincl/data.hpp"
#include "twincl/graph.hpp"
#include "twincl/matrix.hpp"

namespace twincl::test {

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (double& x : m.flat()) x = n(rng);
  return m;
}

/// Central differences of a scalar function of every entry of `x`.
inline Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, Matrix x,
                               double h = 1e-5) {
  Matrix g(x.rows(), x.cols());
  for (Index k = 0; k < x.size(); ++k) {
    const double keep = x.flat()[k];
    x.flat()[k] = keep + h;
    const double up = f(x);
    x.flat()[k] = keep - h;
    const double down = f(x);
    x.flat()[k] = keep;
    g.flat()[k] = (up - down) / (2.0 * h);
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||), zero when both vanish.
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (Index k = 0; k < a.size(); ++k) {
    diff += (a[k] - b[k]) * (a[k] - b[k]);
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

inline double relative_error(const Matrix& a, const Matrix& b) {
  return relative_error(a.flat(), b.flat());
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (Index k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.flat()[k] - b.flat()[k]));
  return m;
}

inline double frobenius_dot(const Matrix& a, const Matrix& b) {
  return std::inner_product(a.flat().begin(), a.flat().end(), b.flat().begin(), 0.0);
}

/// Unique random edges; every user and item gets at least one edge when
/// `cover` is set.
inline std::vector<Edge> random_edges(Index users, Index items, double density,
                                      std::mt19937_64& rng, bool cover = true) {
  std::set<Edge> edges;
  std::bernoulli_distribution keep(density);
  for (Index u = 0; u < users; ++u)
    for (Index i = 0; i < items; ++i)
      if (keep(rng)) edges.insert({u, i});
  if (cover) {
    std::uniform_int_distribution<Index> pu(0, users - 1), pi(0, items - 1);
    for (Index u = 0; u < users; ++u) edges.insert({u, pi(rng)});
    for (Index i = 0; i < items; ++i) edges.insert({pu(rng), i});
  }
  if (edges.empty()) edges.insert({0, 0});
  return {edges.begin(), edges.end()};
}

/// Dense D^{-1/2} A D^{-1/2} from an edge list, users first.
inline Matrix dense_adjacency(std::span<const Edge> edges, Index users, Index items) {
  const Index n = users + items;
  Matrix a(n, n);
  std::vector<double> deg(n, 0.0);
  for (const auto& [u, i] : edges) {
    a(u, users + i) = 1.0;
    a(users + i, u) = 1.0;
  }
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) deg[r] += a(r, c);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c)
      if (a(r, c) != 0.0) a(r, c) /= std::sqrt(deg[r] * deg[c]);
  return a;
}

inline Matrix dense_multiply(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (Index r = 0; r < a.rows(); ++r)
    for (Index k = 0; k < a.cols(); ++k) {
      const double x = a(r, k);
      if (x == 0.0) continue;
      for (Index c = 0; c < b.cols(); ++c) out(r, c) += x * b(k, c);
    }
  return out;
}

/// Mean of {E, AE, A^2 E, ...} by dense products.
inline Matrix dense_propagate(const Matrix& a, const Matrix& e0, int layers) {
  Matrix sum = e0, cur = e0;
  for (int l = 0; l < layers; ++l) {
    cur = dense_multiply(a, cur);
    for (Index k = 0; k < sum.size(); ++k) sum.flat()[k] += cur.flat()[k];
  }
  for (double& x : sum.flat()) x /= static_cast<double>(layers + 1);
  return sum;
}

/// Brute-force metrics for one user: sort every unmasked item by
/// (score desc, index asc), then count hits.
struct BruteMetrics {
  double recall = 0.0;
  double ndcg = 0.0;
};

inline BruteMetrics brute_force_user(const std::vector<double>& scores,
                                     const std::vector<Index>& masked,
                                     const std::vector<Index>& truth, Index k) {
  std::vector<Index> order;
  for (Index i = 0; i < scores.size(); ++i)
    if (std::find(masked.begin(), masked.end(), i) == masked.end()) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  BruteMetrics m;
  double dcg = 0.0, idcg = 0.0;
  Index hits = 0;
  for (Index r = 0; r < std::min<Index>(k, order.size()); ++r) {
    if (std::find(truth.begin(), truth.end(), order[r]) != truth.end()) {
      ++hits;
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  for (Index r = 0; r < std::min<Index>(k, truth.size()); ++r)
    idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  m.recall = static_cast<double>(hits) / static_cast<double>(truth.size());
  m.ndcg = dcg / idcg;
  return m;
}

/// Planted four-block dataset. Each user draws 20 items from its own block;
/// 10% of them are rewired to a random other block. A quarter of the
/// remaining in-block edges go to test.
struct BlockDataset {
  std::vector<RawInteraction> train;
  std::vector<RawInteraction> test;
  Index users = 200;
  Index items = 100;
  Index blocks = 4;
  Index block_of_user(Index u) const { return u % blocks; }
  Index block_of_item(Index i) const { return i / (items / blocks); }
};

inline BlockDataset make_block_dataset(std::uint64_t seed) {
  BlockDataset d;
  std::mt19937_64 rng(seed);
  const Index per_block = d.items / d.blocks;
  for (Index u = 0; u < d.users; ++u) {
    const Index b = d.block_of_user(u);
    std::vector<Index> own(per_block);
    std::iota(own.begin(), own.end(), b * per_block);
    std::shuffle(own.begin(), own.end(), rng);
    own.resize(20);
    std::vector<Index> in_block, rewired;
    std::set<Index> taken(own.begin(), own.end());
    for (Index k = 0; k < own.size(); ++k) {
      if (k < 2) {  // 10% of 20
        Index cand;
        do {
          cand = std::uniform_int_distribution<Index>(0, d.items - 1)(rng);
        } while (cand / per_block == b || taken.count(cand));
        taken.insert(cand);
        rewired.push_back(cand);
      } else {
        in_block.push_back(own[k]);
      }
    }
    const auto held = static_cast<Index>(std::lround(0.25 * static_cast<double>(in_block.size())));
    for (Index k = 0; k < in_block.size(); ++k) {
      RawInteraction r{std::to_string(u), std::to_string(in_block[k])};
      (k < held ? d.test : d.train).push_back(r);
    }
    for (Index i : rewired) d.train.push_back({std::to_string(u), std::to_string(i)});
  }
  return d;
}

/// Item popularity following a steep power law: item i gets about
/// base / (i+1)^1.2 interactions from distinct random users.
inline std::vector<Edge> make_skewed_edges(Index users, Index items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::set<Edge> edges;
  std::vector<Index> pool(users);
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < items; ++i) {
    const auto count = std::max<Index>(
        1, static_cast<Index>(static_cast<double>(users) * 0.6 /
                              std::pow(static_cast<double>(i + 1), 1.2)));
    std::shuffle(pool.begin(), pool.end(), rng);
    for (Index k = 0; k < count; ++k) edges.insert({pool[k], i});
  }
  for (Index u = 0; u < users; ++u)
    edges.insert({u, std::uniform_int_distribution<Index>(0, items - 1)(rng)});
  return {edges.begin(), edges.end()};
}

}  // namespace twincl::test
