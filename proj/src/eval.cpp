#include "twincl/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

#include "twincl/objectives.hpp"

namespace twincl {

namespace {

Index position_of_k(const std::vector<int>& ks, int k) {
  auto it = std::find(ks.begin(), ks.end(), k);
  if (it == ks.end()) throw Error("metric @" + std::to_string(k) + " was not computed");
  return static_cast<Index>(it - ks.begin());
}

bool contains(std::span<const Index> sorted, Index x) {
  return std::binary_search(sorted.begin(), sorted.end(), x);
}

}  // namespace

double RankingReport::recall_at(int k) const { return recall[position_of_k(ks, k)]; }
double RankingReport::ndcg_at(int k) const { return ndcg[position_of_k(ks, k)]; }

std::vector<Index> top_k_items(const Matrix& z, Index num_users, Index user,
                               std::span<const Index> excluded, Index k) {
  const Index num_items = z.rows() - num_users;
  auto zu = z.row(user);
  std::vector<std::pair<double, Index>> cand;
  cand.reserve(num_items);
  for (Index i = 0; i < num_items; ++i) {
    if (contains(excluded, i)) continue;
    cand.emplace_back(dot(zu, z.row(num_users + i)), i);
  }
  const auto better = [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  };
  const Index take = std::min<Index>(k, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take),
                    cand.end(), better);
  std::vector<Index> out(take);
  for (Index r = 0; r < take; ++r) out[r] = cand[r].second;
  return out;
}

double recall_at_k(std::span<const Index> ranked, std::span<const Index> truth, Index k) {
  if (truth.empty()) return 0.0;
  Index hits = 0;
  for (Index r = 0; r < std::min<Index>(k, ranked.size()); ++r)
    hits += contains(truth, ranked[r]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double ndcg_at_k(std::span<const Index> ranked, std::span<const Index> truth, Index k) {
  if (truth.empty()) return 0.0;
  double dcg = 0.0;
  for (Index r = 0; r < std::min<Index>(k, ranked.size()); ++r)
    if (contains(truth, ranked[r])) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  double idcg = 0.0;
  for (Index r = 0; r < std::min<Index>(k, truth.size()); ++r)
    idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / idcg;
}

RankingReport rank_and_score(const Matrix& z, Index num_users, const ItemLists& train_mask,
                             const ItemLists& ground_truth, std::span<const int> ks,
                             EvalOptions options) {
  if (ks.empty()) throw Error("rank_and_score: no cutoffs given");
  if (ground_truth.size() > num_users || train_mask.size() > num_users)
    throw Error("rank_and_score: more users in lists than in the table");
  RankingReport report;
  report.ks.assign(ks.begin(), ks.end());
  std::sort(report.ks.begin(), report.ks.end());
  if (report.ks.front() < 1) throw Error("rank_and_score: cutoffs must be positive");
  const Index max_k = static_cast<Index>(report.ks.back());
  const Index nk = report.ks.size();

  for (Index u = 0; u < ground_truth.size(); ++u) {
    if (ground_truth[u].empty()) {
      ++report.skipped_users;
    } else {
      report.users.push_back(u);
    }
  }
  report.skipped_users += num_users - ground_truth.size();
  const Index n = report.users.size();
  report.evaluated_users = n;

  std::vector<std::vector<double>> rec(nk, std::vector<double>(n));
  std::vector<std::vector<double>> ndcg(nk, std::vector<double>(n));
  static const std::vector<Index> kEmpty;
  auto eval_user = [&](Index pos) {
    const Index u = report.users[pos];
    const auto& mask = u < train_mask.size() ? train_mask[u] : kEmpty;
    const auto ranked = top_k_items(z, num_users, u, mask, max_k);
    for (Index j = 0; j < nk; ++j) {
      const auto k = static_cast<Index>(report.ks[j]);
      rec[j][pos] = recall_at_k(ranked, ground_truth[u], k);
      ndcg[j][pos] = ndcg_at_k(ranked, ground_truth[u], k);
    }
  };
  if (options.parallel) {
    const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 32)
    for (std::ptrdiff_t p = 0; p < nn; ++p) eval_user(static_cast<Index>(p));
  } else {
    for (Index p = 0; p < n; ++p) eval_user(p);
  }

  // Serial reduction in user order keeps results independent of threading.
  report.recall.assign(nk, 0.0);
  report.ndcg.assign(nk, 0.0);
  for (Index j = 0; j < nk; ++j) {
    for (Index p = 0; p < n; ++p) {
      report.recall[j] += rec[j][p];
      report.ndcg[j] += ndcg[j][p];
    }
    if (n > 0) {
      report.recall[j] /= static_cast<double>(n);
      report.ndcg[j] /= static_cast<double>(n);
    }
  }
  if (options.keep_per_user) {
    report.user_recall = std::move(rec);
    report.user_ndcg = std::move(ndcg);
  }
  return report;
}

namespace {

// Contiguous split of the ascending-sorted prefix sums `prefix` into `groups`
// nonempty runs whose totals all lie in [lo, lo + width]. With width at least
// the largest count, the positions reachable after k runs form one interval,
// so feasibility is a forward sweep over intervals. Returns run boundaries.
std::optional<std::vector<Index>> split_within(const std::vector<Index>& prefix, Index groups,
                                               Index lo, Index width) {
  const Index n = prefix.size() - 1;
  const Index hi = lo + width;
  auto first_at_least = [&](Index i) {
    const auto it = std::lower_bound(prefix.begin(), prefix.end(), prefix[i] + lo);
    return std::max<Index>(i + 1, it - prefix.begin());
  };
  auto last_at_most = [&](Index bound) {
    return static_cast<Index>(std::upper_bound(prefix.begin(), prefix.end(), bound) -
                              prefix.begin()) - 1;
  };
  std::vector<std::pair<Index, Index>> reach = {{0, 0}};
  for (Index k = 1; k <= groups; ++k) {
    auto [l, r] = reach.back();
    while (r >= l && prefix[n] - prefix[r] < lo) {
      if (r == 0) return std::nullopt;
      --r;
    }
    if (r < l) return std::nullopt;
    const Index nl = first_at_least(l);
    const Index nr = std::min(n, last_at_most(prefix[r] + hi));
    if (nl > nr) return std::nullopt;
    reach.emplace_back(nl, nr);
  }
  if (n < reach[groups].first || n > reach[groups].second) return std::nullopt;

  std::vector<Index> bounds(groups + 1);
  bounds[groups] = n;
  Index pos = n;
  for (Index k = groups; k > 0; --k) {
    const auto [l, r] = reach[k - 1];
    // the latest feasible start keeps earlier runs as full as possible
    const Index latest = prefix[pos] < lo ? 0 : last_at_most(prefix[pos] - lo);
    const Index start = std::min({latest, r, pos - 1});
    if (start < l || prefix[pos] - prefix[start] > hi) return std::nullopt;
    bounds[k - 1] = pos = start;
  }
  if (pos != 0) return std::nullopt;
  return bounds;
}

}  // namespace

std::vector<int> assign_popularity_groups(std::span<const Index> item_counts, int groups) {
  if (groups < 1) throw Error("popularity groups: need at least one group");
  if (item_counts.size() < static_cast<Index>(groups))
    throw Error("popularity groups: fewer items than groups");
  std::vector<Index> order(item_counts.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return item_counts[a] < item_counts[b]; });
  std::vector<Index> prefix(order.size() + 1, 0);
  for (Index k = 0; k < order.size(); ++k) prefix[k + 1] = prefix[k] + item_counts[order[k]];
  const Index total = prefix.back();
  std::vector<int> group(item_counts.size(), 0);
  if (total == 0) return group;
  const auto G = static_cast<Index>(groups);
  const Index width = item_counts[order.back()];

  // Group totals within one largest count of each other: every total lies in
  // [lo, lo + width] for some lo <= total / G. Try lo nearest the centred
  // window first.
  const Index lo_max = total / G;
  const Index lo_min = lo_max > width ? lo_max - width : 0;
  const double centre = static_cast<double>(total) / static_cast<double>(G) -
                        static_cast<double>(width) / 2.0;
  std::vector<Index> candidates;
  for (Index lo = lo_min; lo <= lo_max; ++lo) candidates.push_back(lo);
  std::stable_sort(candidates.begin(), candidates.end(), [&](Index a, Index b) {
    return std::abs(static_cast<double>(a) - centre) < std::abs(static_cast<double>(b) - centre);
  });
  for (Index lo : candidates) {
    if (auto bounds = split_within(prefix, G, lo, width)) {
      for (Index g = 0; g < G; ++g)
        for (Index k = (*bounds)[g]; k < (*bounds)[g + 1]; ++k)
          group[order[k]] = static_cast<int>(g);
      return group;
    }
  }

  // No such split: each item joins the group whose share of the total holds
  // its cumulative count.
  Index cumulative = 0;
  for (Index item : order) {
    cumulative += item_counts[item];
    const Index ceil_share = (G * cumulative + total - 1) / total;
    const Index g = ceil_share == 0 ? 0 : std::min(G, ceil_share) - 1;
    group[item] = static_cast<int>(g);
  }
  return group;
}

PopularityGroups popularity_breakdown(const Matrix& z, Index num_users,
                                      std::span<const Index> item_counts,
                                      const ItemLists& train_mask,
                                      const ItemLists& ground_truth, Index k,
                                      bool parallel) {
  const Index num_items = z.rows() - num_users;
  if (item_counts.size() != num_items)
    throw Error("popularity_breakdown: item count array does not match the table");
  PopularityGroups out;
  out.k = k;
  out.group_of_item = assign_popularity_groups(item_counts);
  out.group_interactions.assign(kPopularityGroups, 0);
  for (Index i = 0; i < num_items; ++i)
    out.group_interactions[out.group_of_item[i]] += item_counts[i];

  const Index n = ground_truth.size();
  // per user: restricted recall and hits per group (-1 recall = skipped)
  std::vector<std::array<double, kPopularityGroups>> user_recall(n);
  std::vector<std::array<Index, kPopularityGroups>> user_hits(n);
  static const std::vector<Index> kEmpty;
  auto eval_user = [&](Index u) {
    user_recall[u].fill(-1.0);
    user_hits[u].fill(0);
    const auto& truth = ground_truth[u];
    if (truth.empty()) return;
    const auto& mask = u < train_mask.size() ? train_mask[u] : kEmpty;
    const auto ranked = top_k_items(z, num_users, u, mask, k);
    std::array<Index, kPopularityGroups> truth_size{};
    for (Index i : truth) ++truth_size[out.group_of_item[i]];
    for (Index i : ranked)
      if (contains(truth, i)) ++user_hits[u][out.group_of_item[i]];
    for (int g = 0; g < kPopularityGroups; ++g)
      if (truth_size[g] > 0)
        user_recall[u][g] = static_cast<double>(user_hits[u][g]) /
                            static_cast<double>(truth_size[g]);
  };
  if (parallel) {
    const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 32)
    for (std::ptrdiff_t u = 0; u < nn; ++u) eval_user(static_cast<Index>(u));
  } else {
    for (Index u = 0; u < n; ++u) eval_user(u);
  }

  out.recall.assign(kPopularityGroups, 0.0);
  out.group_hits.assign(kPopularityGroups, 0);
  out.evaluated_users.assign(kPopularityGroups, 0);
  for (Index u = 0; u < n; ++u) {
    for (int g = 0; g < kPopularityGroups; ++g) {
      out.group_hits[g] += user_hits[u][g];
      if (user_recall[u][g] >= 0.0) {
        out.recall[g] += user_recall[u][g];
        ++out.evaluated_users[g];
      }
    }
  }
  for (int g = 0; g < kPopularityGroups; ++g)
    if (out.evaluated_users[g] > 0)
      out.recall[g] /= static_cast<double>(out.evaluated_users[g]);
  return out;
}

AlignUniform measure_alignment_uniformity(const Matrix& z, Index num_users,
                                          std::span<const Edge> positive_pairs,
                                          Index sample_size, std::uint64_t seed,
                                          double t) {
  if (positive_pairs.empty()) throw Error("alignment diagnostic: no positive pairs");
  const Index num_items = z.rows() - num_users;
  std::vector<Index> users(positive_pairs.size()), items(positive_pairs.size());
  for (Index r = 0; r < positive_pairs.size(); ++r) {
    users[r] = positive_pairs[r].first;
    items[r] = num_users + positive_pairs[r].second;
  }
  AlignUniform out;
  out.align = alignment_loss(gather_rows(z, users), gather_rows(z, items)).value;

  std::mt19937_64 rng(seed);
  auto sample = [&](Index offset, Index count) {
    std::uniform_int_distribution<Index> pick(0, count - 1);
    std::vector<Index> ids(sample_size);
    for (Index& id : ids) id = offset + pick(rng);
    return unique_sorted(ids);
  };
  const auto su = sample(0, num_users);
  const auto si = sample(num_users, num_items);
  out.uniform = uniformity_loss(gather_rows(z, su), gather_rows(z, si), t).value;
  return out;
}

ItemLists to_item_lists(std::span<const Edge> edges, Index num_users) {
  ItemLists lists(num_users);
  for (const auto& [u, i] : edges) {
    if (u >= num_users) throw Error("to_item_lists: user out of range");
    lists[u].push_back(i);
  }
  for (auto& l : lists) {
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }
  return lists;
}

}  // namespace twincl
