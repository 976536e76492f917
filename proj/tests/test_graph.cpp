#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "twincl/graph.hpp"

using namespace twincl;

TEST_CASE("single edge graph") {
  std::vector<Edge> e = {{0, 0}};
  auto g = build_graph(e, 1, 1);
  CHECK(g.edges.size() == 1);
  CHECK(g.user_degrees == std::vector<Index>{1});
  CHECK(g.item_degrees == std::vector<Index>{1});
  auto a = normalized_adjacency(g);
  CHECK(a.nnz() == 2);
  CHECK(a.values[0] == 1.0);
  CHECK(a.values[1] == 1.0);
}

TEST_CASE("duplicate edges collapse") {
  std::vector<Edge> e = {{0, 0}, {0, 0}};
  auto g = build_graph(e, 1, 1);
  CHECK(g.edges.size() == 1);
  CHECK(g.user_degrees[0] == 1);
}

TEST_CASE("edges are sorted by user then item") {
  std::vector<Edge> e = {{1, 0}, {0, 2}, {0, 1}, {1, 0}};
  auto g = build_graph(e, 2, 3);
  CHECK(g.edges == std::vector<Edge>{{0, 1}, {0, 2}, {1, 0}});
}

TEST_CASE("invalid graphs are rejected") {
  std::vector<Edge> none;
  CHECK_THROWS_WITH(build_graph(none, 1, 1), "empty graph");
  std::vector<Edge> bad_user = {{2, 0}};
  CHECK_THROWS_AS(build_graph(bad_user, 2, 1), Error);
  std::vector<Edge> bad_item = {{0, 1}};
  CHECK_THROWS_AS(build_graph(bad_item, 1, 1), Error);
}

TEST_CASE("three edge example") {
  std::vector<Edge> e = {{0, 0}, {0, 1}, {1, 1}};
  auto a = normalized_adjacency(build_graph(e, 2, 2));
  auto at = [&](Index r, Index c) {
    for (Index k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k)
      if (a.col_idx[k] == c) return a.values[k];
    return 0.0;
  };
  CHECK(at(0, 2) == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(at(0, 3) == doctest::Approx(0.5));
  CHECK(at(1, 3) == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(at(2, 0) == at(0, 2));
  CHECK(at(3, 1) == at(1, 3));
  CHECK(at(1, 2) == 0.0);
}

TEST_CASE("degree zero nodes have empty rows") {
  std::vector<Edge> e = {{0, 0}};
  auto g = build_graph(e, 2, 3);
  auto a = normalized_adjacency(g);
  CHECK(g.user_degrees[1] == 0);
  CHECK(a.row_ptr[2] == a.row_ptr[1]);
  CHECK(a.row_ptr.back() == 2);
}

TEST_CASE("adjacency invariants on random graphs") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Index nu = 1 + rng() % 20, ni = 1 + rng() % 25;
    auto edges = test::random_edges(nu, ni, 0.2, rng, trial % 2 == 0);
    auto g = build_graph(edges, nu, ni);
    auto a = normalized_adjacency(g);
    REQUIRE(a.nnz() == 2 * g.edges.size());
    REQUIRE(a.dimension == nu + ni);

    for (Index u = 0; u < nu; ++u) {
      Index count = 0;
      for (const auto& [eu, ei] : g.edges) count += eu == u;
      CHECK(g.user_degrees[u] == count);
    }

    Matrix dense(a.dimension, a.dimension);
    for (Index r = 0; r < a.dimension; ++r) {
      for (Index k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
        const Index c = a.col_idx[k];
        if (k > a.row_ptr[r]) CHECK(a.col_idx[k - 1] < c);
        // bipartite: no user-user or item-item entries
        CHECK((r < nu) != (c < nu));
        const Index deg_r = r < nu ? g.user_degrees[r] : g.item_degrees[r - nu];
        const Index deg_c = c < nu ? g.user_degrees[c] : g.item_degrees[c - nu];
        CHECK(a.values[k] == 1.0 / std::sqrt(static_cast<double>(deg_r * deg_c)));
        dense(r, c) = a.values[k];
      }
    }
    for (Index r = 0; r < a.dimension; ++r)
      for (Index c = 0; c < a.dimension; ++c) REQUIRE(dense(r, c) == dense(c, r));

    // A * 1 against the dense oracle
    const Matrix oracle = test::dense_adjacency(g.edges, nu, ni);
    for (Index r = 0; r < a.dimension; ++r) {
      double sparse_sum = 0.0, dense_sum = 0.0;
      for (Index k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) sparse_sum += a.values[k];
      for (Index c = 0; c < a.dimension; ++c) dense_sum += oracle(r, c);
      CHECK(std::abs(sparse_sum - dense_sum) <= 1e-12);
    }
  }
}

TEST_CASE("user item lists") {
  std::vector<Edge> e = {{1, 2}, {0, 1}, {1, 0}};
  auto lists = user_item_lists(build_graph(e, 3, 3));
  CHECK(lists[0] == std::vector<Index>{1});
  CHECK(lists[1] == std::vector<Index>{0, 2});
  CHECK(lists[2].empty());
}
