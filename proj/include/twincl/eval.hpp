#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "twincl/graph.hpp"
#include "twincl/matrix.hpp"

namespace twincl {

using ItemLists = std::vector<std::vector<Index>>;  // per user, sorted item ids

inline const std::vector<int> kDefaultKs = {10, 20, 50};

/// Averages of Recall@K and NDCG@K over evaluated users, K ascending.
struct RankingReport {
  std::vector<int> ks;
  std::vector<double> recall;
  std::vector<double> ndcg;
  Index evaluated_users = 0;
  Index skipped_users = 0;  // users with no ground truth

  // Filled when requested: [k position][evaluated user position].
  std::vector<Index> users;
  std::vector<std::vector<double>> user_recall;
  std::vector<std::vector<double>> user_ndcg;

  double recall_at(int k) const;
  double ndcg_at(int k) const;
};

struct EvalOptions {
  bool parallel = true;
  bool keep_per_user = false;
};

/// Top-k items for one user by dot-product score, excluding `excluded`
/// (sorted). Ties go to the lower item index.
std::vector<Index> top_k_items(const Matrix& z, Index num_users, Index user,
                               std::span<const Index> excluded, Index k);

/// Full-ranking evaluation: every item the user has no training interaction
/// with is a candidate. Users without ground truth are skipped and counted.
RankingReport rank_and_score(const Matrix& z, Index num_users, const ItemLists& train_mask,
                             const ItemLists& ground_truth,
                             std::span<const int> ks = kDefaultKs,
                             EvalOptions options = {});

/// Binary-relevance metrics for one ranked list.
double recall_at_k(std::span<const Index> ranked, std::span<const Index> truth, Index k);
double ndcg_at_k(std::span<const Index> ranked, std::span<const Index> truth, Index k);

inline constexpr int kPopularityGroups = 10;

/// Items sorted ascending by training count (ties by index) and cut into
/// contiguous groups whose interaction totals differ pairwise by at most the
/// largest single item count when such a cut exists. Group ids run
/// 0..groups-1, higher ids holding more popular items.
std::vector<int> assign_popularity_groups(std::span<const Index> item_counts,
                                          int groups = kPopularityGroups);

struct PopularityGroups {
  std::vector<int> group_of_item;
  std::vector<Index> group_interactions;
  std::vector<double> recall;          // Recall@k restricted to each group
  std::vector<Index> group_hits;       // top-k hits whose item is in the group
  std::vector<Index> evaluated_users;  // users with non-empty restricted truth
  Index k = 20;
};

PopularityGroups popularity_breakdown(const Matrix& z, Index num_users,
                                      std::span<const Index> item_counts,
                                      const ItemLists& train_mask,
                                      const ItemLists& ground_truth, Index k = 20,
                                      bool parallel = true);

struct AlignUniform {
  double align = 0.0;
  double uniform = 0.0;
};

/// Alignment over the given positive pairs; uniformity over users and items
/// sampled with replacement (duplicates dropped before pairing).
AlignUniform measure_alignment_uniformity(const Matrix& z, Index num_users,
                                          std::span<const Edge> positive_pairs,
                                          Index sample_size = 10000,
                                          std::uint64_t seed = 0, double t = 2.0);

/// Groups an edge list into per-user sorted item lists.
ItemLists to_item_lists(std::span<const Edge> edges, Index num_users);

}  // namespace twincl
