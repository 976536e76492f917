#include <doctest.h>

#include "oracles.hpp"
#include "twincl/kernels.hpp"

using namespace twincl;

TEST_CASE("serial and parallel spmm agree bit for bit") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Index nu = 5 + rng() % 200, ni = 5 + rng() % 200;
    auto adj = normalized_adjacency(build_graph(test::random_edges(nu, ni, 0.05, rng), nu, ni));
    const Matrix x = test::random_matrix(nu + ni, 1 + rng() % 16, rng);
    Matrix a, b;
    kernels::spmm_serial(adj, x, a);
    kernels::spmm_parallel(adj, x, b);
    REQUIRE(a == b);
  }
}

TEST_CASE("spmm matches the dense oracle") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const Index nu = 1 + rng() % 25, ni = 1 + rng() % 25;
    auto edges = test::random_edges(nu, ni, 0.15, rng);
    auto g = build_graph(edges, nu, ni);
    auto adj = normalized_adjacency(g);
    const Matrix x = test::random_matrix(nu + ni, 3, rng);
    Matrix out;
    kernels::spmm_serial(adj, x, out);
    CHECK(test::max_abs_diff(out, test::dense_multiply(test::dense_adjacency(g.edges, nu, ni), x)) <=
          1e-12);
  }
}

TEST_CASE("accumulate kernels") {
  std::mt19937_64 rng(5);
  const Matrix x = test::random_matrix(300, 7, rng);
  Matrix a = test::random_matrix(300, 7, rng), b = a;
  kernels::accumulate_serial(x, a);
  kernels::accumulate_parallel(x, b);
  CHECK(a == b);
  CHECK(a(0, 0) == b(0, 0));
}

TEST_CASE("shape mismatch throws") {
  std::vector<Edge> e = {{0, 0}};
  auto adj = normalized_adjacency(build_graph(e, 1, 1));
  Matrix out;
  CHECK_THROWS_AS(kernels::spmm_serial(adj, Matrix(3, 2), out), Error);
  CHECK_THROWS_AS(kernels::spmm_parallel(adj, Matrix(3, 2), out), Error);
  Matrix acc(2, 2);
  CHECK_THROWS_AS(kernels::accumulate_serial(Matrix(2, 3), acc), Error);
}

TEST_CASE("thread count is positive") { CHECK(kernels::max_threads() >= 1); }
