#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "twincl/embeddings.hpp"

using namespace twincl;

namespace {

NormalizedAdjacency three_edge_adj() {
  std::vector<Edge> e = {{0, 0}, {0, 1}, {1, 1}};
  return normalized_adjacency(build_graph(e, 2, 2));
}

}  // namespace

TEST_CASE("init is reproducible and bounded") {
  auto a = init_embeddings(10, 20, 8, 42);
  auto b = init_embeddings(10, 20, 8, 42);
  auto c = init_embeddings(10, 20, 8, 43);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  CHECK(a.dim() == 8);
  CHECK(a.num_nodes() == 30);
  const double bound = std::sqrt(6.0 / (30.0 + 8.0));
  CHECK(xavier_bound(30, 8) == doctest::Approx(bound));
  for (double x : a.values.flat()) CHECK(std::abs(x) <= bound);
  CHECK_THROWS_AS(init_embeddings(1, 1, 0, 0), Error);
}

TEST_CASE("default dimension table is 64 wide") {
  auto t = init_embeddings(3, 4, 64, 1);
  CHECK(t.values.cols() == 64);
}

TEST_CASE("init mean within three standard errors of zero") {
  auto t = init_embeddings(5000, 5000, 64, 7);
  double sum = 0.0;
  for (double x : t.values.flat()) sum += x;
  const double n = static_cast<double>(t.values.size());
  const double b = xavier_bound(10000, 64);
  // U(-b, b) has variance b^2 / 3
  const double standard_error = std::sqrt(b * b / 3.0 / n);
  CHECK(std::abs(sum / n) <= 3.0 * standard_error);
}

TEST_CASE("zero layers is the identity") {
  auto adj = three_edge_adj();
  std::mt19937_64 rng(1);
  const Matrix e = test::random_matrix(4, 3, rng);
  CHECK(propagate(adj, e, 0).z == e);
  CHECK(backprop_propagate(adj, e, 0) == e);
}

TEST_CASE("one layer example") {
  auto adj = three_edge_adj();
  Matrix e(4, 1);
  e(0, 0) = 1.0;
  e(1, 0) = 1.0;
  auto out = propagate(adj, e, 1, true);
  CHECK(out.z(2, 0) == doctest::Approx(0.35355).epsilon(1e-5));
  REQUIRE(out.per_layer.size() == 2);
  CHECK(out.per_layer[0] == e);
}

TEST_CASE("propagation matches the dense oracle") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 40; ++trial) {
    const Index nu = 1 + rng() % 25, ni = 1 + rng() % 25;
    auto edges = test::random_edges(nu, ni, 0.2, rng, trial % 3 != 0);
    auto g = build_graph(edges, nu, ni);
    auto adj = normalized_adjacency(g);
    const Matrix dense = test::dense_adjacency(g.edges, nu, ni);
    const Matrix e = test::random_matrix(nu + ni, 4, rng);
    for (int layers : {1, 2, 3}) {
      auto out = propagate(adj, e, layers, true, trial % 2 == 0);
      CHECK(test::max_abs_diff(out.z, test::dense_propagate(dense, e, layers)) <= 1e-12);
      Matrix mean(e.rows(), e.cols());
      for (const auto& layer : out.per_layer)
        for (Index k = 0; k < mean.size(); ++k) mean.flat()[k] += layer.flat()[k];
      for (double& x : mean.flat()) x /= static_cast<double>(layers + 1);
      CHECK(test::max_abs_diff(mean, out.z) <= 1e-14);
    }
  }
}

TEST_CASE("backprop equals forward and satisfies the adjoint identity") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const Index nu = 1 + rng() % 20, ni = 1 + rng() % 20;
    auto adj = normalized_adjacency(build_graph(test::random_edges(nu, ni, 0.3, rng), nu, ni));
    const Matrix e = test::random_matrix(nu + ni, 3, rng);
    const Matrix g = test::random_matrix(nu + ni, 3, rng);
    for (int layers : {1, 2, 3}) {
      const Matrix back = backprop_propagate(adj, g, layers);
      CHECK(back == propagate(adj, g, layers).z);
      const double lhs = test::frobenius_dot(propagate(adj, e, layers).z, g);
      const double rhs = test::frobenius_dot(e, back);
      CHECK(std::abs(lhs - rhs) <= 1e-10);
    }
  }
}

TEST_CASE("propagation is linear") {
  std::mt19937_64 rng(4);
  auto adj = normalized_adjacency(build_graph(test::random_edges(15, 12, 0.3, rng), 15, 12));
  const Matrix e1 = test::random_matrix(27, 5, rng), e2 = test::random_matrix(27, 5, rng);
  const double a = 1.7, b = -0.3;
  Matrix mix(27, 5);
  for (Index k = 0; k < mix.size(); ++k) mix.flat()[k] = a * e1.flat()[k] + b * e2.flat()[k];
  const Matrix z1 = propagate(adj, e1, 3).z, z2 = propagate(adj, e2, 3).z;
  const Matrix zm = propagate(adj, mix, 3).z;
  for (Index k = 0; k < zm.size(); ++k)
    CHECK(std::abs(zm.flat()[k] - (a * z1.flat()[k] + b * z2.flat()[k])) <= 1e-10);
}

TEST_CASE("serial and parallel propagation agree") {
  std::mt19937_64 rng(5);
  auto adj = normalized_adjacency(build_graph(test::random_edges(300, 200, 0.02, rng), 300, 200));
  const Matrix e = test::random_matrix(500, 8, rng);
  CHECK(propagate(adj, e, 3, false, true).z == propagate(adj, e, 3, false, false).z);
}

TEST_CASE("propagation shape errors") {
  auto adj = three_edge_adj();
  CHECK_THROWS_AS(propagate(adj, Matrix(5, 2), 1), Error);
  CHECK_THROWS_AS(backprop_propagate(adj, Matrix(3, 2), 1), Error);
}

TEST_CASE("propagator counts passes") {
  auto adj = three_edge_adj();
  Propagator p(adj, 2);
  Matrix e(4, 2, 1.0);
  p.forward(e);
  p.forward(e);
  p.backward(e);
  CHECK(p.calls() == 3);
  CHECK(p.layers() == 2);
}

TEST_CASE("twin update arithmetic") {
  EmbeddingTable theta{1, 0, Matrix(1, 1, 0.0)};
  auto s = TwinState::from_initial(theta, 0.9);
  CHECK(s.phi == s.theta);
  s.phi.values(0, 0) = 1.0;
  twin_update(s);
  CHECK(s.phi.values(0, 0) == doctest::Approx(0.9));
  CHECK(s.theta.values(0, 0) == 0.0);
  CHECK(s.iteration == 1);
}

TEST_CASE("beta zero copies theta") {
  std::mt19937_64 rng(6);
  auto s = TwinState::from_initial(init_embeddings(3, 3, 4, 1), 0.0);
  s.theta.values = test::random_matrix(6, 4, rng);
  twin_update(s);
  CHECK(s.phi.values == s.theta.values);
}

TEST_CASE("constant theta is a fixed point") {
  auto s = TwinState::from_initial(init_embeddings(4, 5, 3, 9), 0.9);
  for (int k = 0; k < 25; ++k) twin_update(s);
  CHECK(test::max_abs_diff(s.phi.values, s.theta.values) <= 1e-15);
  CHECK(s.iteration == 25);
}

TEST_CASE("invalid beta rejected") {
  auto t = init_embeddings(1, 1, 2, 0);
  CHECK_THROWS_AS(TwinState::from_initial(t, 1.0), Error);
  CHECK_THROWS_AS(TwinState::from_initial(t, -0.1), Error);
}

TEST_CASE("twin unroll closed form") {
  std::mt19937_64 rng(7);
  for (double beta : {0.5, 0.9, 0.99}) {
    auto s = TwinState::from_initial(init_embeddings(3, 4, 5, 11), beta);
    std::vector<Matrix> history = {s.theta.values};
    for (int t = 1; t <= 50; ++t) {
      s.theta.values = test::random_matrix(7, 5, rng);
      history.push_back(s.theta.values);
      twin_update(s);
    }
    const int n = 50;
    Matrix expect(7, 5);
    for (Index k = 0; k < expect.size(); ++k) {
      double v = std::pow(beta, n) * history[0].flat()[k];
      for (int t = 1; t <= n; ++t)
        v += (1.0 - beta) * std::pow(beta, n - t) * history[t].flat()[k];
      expect.flat()[k] = v;
    }
    CHECK(test::max_abs_diff(s.phi.values, expect) <= 1e-12);
  }
}

TEST_CASE("score examples") {
  std::vector<double> e1 = {1.0, 0.0}, e2 = {0.0, 1.0}, a = {1.0, 2.0}, b = {3.0, 4.0};
  CHECK(score(e1, e1) == 1.0);
  CHECK(score(e1, e2) == 0.0);
  CHECK(score(a, b) == 11.0);
  std::vector<double> a3 = {3.0, 6.0};
  CHECK(score(a3, b) == 3.0 * score(a, b));
  std::vector<double> short_vec = {1.0};
  CHECK_THROWS_AS(score(a, short_vec), Error);
}

TEST_CASE("encoder divergence examples") {
  EmbeddingTable theta{1, 0, Matrix(1, 2)};
  theta.values(0, 0) = 1.0;
  auto phi = theta;
  auto same = encoder_divergence(theta, phi);
  CHECK(same.cosine_similarity == doctest::Approx(1.0));
  CHECK(same.euclidean_distance == 0.0);

  phi.values(0, 0) = -1.0;
  auto anti = encoder_divergence(theta, phi);
  CHECK(anti.cosine_similarity == doctest::Approx(-1.0));
  CHECK(anti.euclidean_distance == doctest::Approx(2.0));

  phi.values(0, 0) = 0.0;
  phi.values(0, 1) = 1.0;
  auto ortho = encoder_divergence(theta, phi);
  CHECK(ortho.cosine_similarity == doctest::Approx(0.0));
  CHECK(ortho.euclidean_distance == doctest::Approx(1.41421).epsilon(1e-5));

  EmbeddingTable zero{1, 0, Matrix(1, 2)};
  CHECK_THROWS_AS(encoder_divergence(zero, phi), Error);
}
