// Serial reference versus OpenMP kernels on a synthetic interaction graph.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>

#include "twincl/embeddings.hpp"
#include "twincl/eval.hpp"
#include "twincl/kernels.hpp"

using namespace twincl;

namespace {

std::vector<Edge> power_law_edges(Index users, Index items, Index per_user, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> weight(items);
  for (Index i = 0; i < items; ++i) weight[i] = 1.0 / std::pow(1.0 + i, 0.8);
  std::discrete_distribution<Index> pick(weight.begin(), weight.end());
  std::vector<Edge> edges;
  for (Index u = 0; u < users; ++u) {
    std::set<Index> chosen;
    while (chosen.size() < std::min(per_user, items)) chosen.insert(pick(rng));
    for (Index i : chosen) edges.emplace_back(u, i);
  }
  return edges;
}

double best_of(int reps, const std::function<void()>& body) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    best = std::min(best,
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, double serial, double parallel, double diff) {
  std::printf("%-16s %10.2f %10.2f %8.2fx %10.1e\n", name, serial * 1e3, parallel * 1e3,
              serial / parallel, diff);
}

double max_diff(const Matrix& a, const Matrix& b) {
  double d = 0.0;
  for (Index k = 0; k < a.flat().size(); ++k) d = std::max(d, std::abs(a.flat()[k] - b.flat()[k]));
  return d;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"twincl kernel benchmark"};
  Index users = 20000, items = 15000, per_user = 30, dim = 64, eval_users = 2000;
  int reps = 3, layers = 3;
  app.add_option("--users", users);
  app.add_option("--items", items);
  app.add_option("--per-user", per_user);
  app.add_option("--dim", dim);
  app.add_option("--layers", layers);
  app.add_option("--eval-users", eval_users, "users ranked in the evaluation benchmark");
  app.add_option("--reps", reps);
  CLI11_PARSE(app, argc, argv);

  const auto edges = power_law_edges(users, items, per_user, 1);
  const auto adj = normalized_adjacency(build_graph(edges, users, items));
  const Matrix e0 = init_embeddings(users, items, dim, 2).values;
  std::printf("graph: %zu users, %zu items, %zu edges, dim %zu, %d threads\n",
              static_cast<std::size_t>(users), static_cast<std::size_t>(items), edges.size(),
              static_cast<std::size_t>(dim), kernels::max_threads());
  std::printf("%-16s %10s %10s %9s %10s\n", "kernel", "serial ms", "omp ms", "speedup",
              "max diff");

  Matrix out_s(e0.rows(), dim), out_p(e0.rows(), dim);
  row("spmm", best_of(reps, [&] { kernels::spmm_serial(adj, e0, out_s); }),
      best_of(reps, [&] { kernels::spmm_parallel(adj, e0, out_p); }), max_diff(out_s, out_p));

  Matrix zs, zp;
  row("propagate",
      best_of(reps, [&] { zs = propagate(adj, e0, layers, false, false).z; }),
      best_of(reps, [&] { zp = propagate(adj, e0, layers, false, true).z; }), max_diff(zs, zp));

  // rank a subset of users so the benchmark stays short
  Matrix z(eval_users + items, dim);
  for (Index r = 0; r < eval_users; ++r)
    std::copy(zs.row(r).begin(), zs.row(r).end(), z.row(r).begin());
  for (Index i = 0; i < items; ++i)
    std::copy(zs.row(users + i).begin(), zs.row(users + i).end(), z.row(eval_users + i).begin());
  std::vector<Edge> seen(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(
                                                           eval_users * per_user));
  const auto mask = to_item_lists(seen, eval_users);
  ItemLists truth(eval_users);
  for (Index u = 0; u < eval_users; ++u) truth[u] = {(u * 7919) % items};
  RankingReport rs, rp;
  const double ts =
      best_of(reps, [&] { rs = rank_and_score(z, eval_users, mask, truth, kDefaultKs, {.parallel = false}); });
  const double tp =
      best_of(reps, [&] { rp = rank_and_score(z, eval_users, mask, truth, kDefaultKs, {.parallel = true}); });
  double diff = 0.0;
  for (Index j = 0; j < rs.ndcg.size(); ++j) diff = std::max(diff, std::abs(rs.ndcg[j] - rp.ndcg[j]));
  row("rank_and_score", ts, tp, diff);
  return 0;
}
