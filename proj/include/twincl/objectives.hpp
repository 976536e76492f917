#pragma once

#include <span>
#include <string>
#include <vector>

#include "twincl/matrix.hpp"

namespace twincl {

enum class LossVariant {
  AU,   // alignment + gamma * uniformity
  BPR,  // pairwise ranking loss in place of alignment/uniformity
};

std::string to_string(LossVariant v);
LossVariant parse_variant(const std::string& s);

/// Weights and temperatures of the joint objective
///   align + gamma * uniform + lambda_cl * CL + lambda_reg * ||Theta||^2.
struct ObjectiveConfig {
  double gamma = 1.0;
  double lambda_cl = 0.5;
  double lambda_reg = 1e-4;
  double tau = 0.2;
  double t_uniform = 2.0;
  LossVariant variant = LossVariant::AU;
  bool cl_normalize = true;  // cosine logits in the contrastive term
  bool cl_mean = false;      // average instead of sum over contrastive rows

  void validate() const;
};

/// z / ||z|| together with what is needed to pull gradients back through it.
struct NormalizedVector {
  std::vector<double> unit;
  double norm = 0.0;

  /// Writes J^T g = (g - f <f, g>) / ||z|| into `out`.
  void jacobian_apply(std::span<const double> g, std::span<double> out) const;
};

NormalizedVector l2_normalize(std::span<const double> z);

struct LossAndGrad {
  double value = 0.0;
  Matrix grad_users;
  Matrix grad_items;
  Matrix grad_negatives;  // BPR only
};

/// Single block (one node type) loss with gradient per input row.
struct BlockLoss {
  double value = 0.0;
  Matrix grad;
};

/// Mean squared distance between normalized positive pairs (row r of each).
LossAndGrad alignment_loss(const Matrix& users, const Matrix& items);

/// log of the mean Gaussian potential exp(-t ||f(x) - f(y)||^2) over ordered
/// pairs x != y of rows. Rows are expected to be distinct nodes.
BlockLoss uniformity_block(const Matrix& rows, double t);

/// 0.5 * uniformity_block(users) + 0.5 * uniformity_block(items).
LossAndGrad uniformity_loss(const Matrix& users, const Matrix& items, double t);

/// In-batch InfoNCE: row r of `primary` against all rows of `twin`, with
/// twin row r as the positive. The twin side is a constant; only `primary`
/// receives a gradient. Summed over rows unless `mean` is set.
BlockLoss infonce_block(const Matrix& primary, const Matrix& twin, double tau,
                        bool normalize = true, bool mean = false);

/// User block and item block contrasted separately, then summed.
LossAndGrad infonce_loss(const Matrix& users_primary, const Matrix& users_twin,
                         const Matrix& items_primary, const Matrix& items_twin,
                         double tau, bool normalize = true, bool mean = false);

/// Mean of -log sigmoid(<u, pos> - <u, neg>) over parallel triples, raw scores.
LossAndGrad bpr_loss(const Matrix& users, const Matrix& positives,
                     const Matrix& negatives);

/// lambda * sum ||row||^2 over the unique ids in `rows`; gradient 2 lambda row.
struct Regularization {
  double value = 0.0;
  SparseRows grad;
};
Regularization l2_regularization(const Matrix& table, std::span<const Index> rows,
                                 double lambda);

/// Observed (user, item) pairs of one mini-batch, dense indices. `negatives`
/// is filled only for the BPR variant, parallel to `items`.
struct PositiveBatch {
  std::vector<Index> users;
  std::vector<Index> items;
  std::vector<Index> negatives;

  Index size() const { return users.size(); }
};

struct LossComponents {
  double total = 0.0;
  double align = 0.0;
  double uniform = 0.0;
  double cl = 0.0;
  double bpr = 0.0;
  double reg = 0.0;
};

struct TotalLoss {
  LossComponents parts;
  SparseRows dz;       // gradient w.r.t. final representations, global node rows
  SparseRows dtheta0;  // regularizer gradient w.r.t. layer-0 rows
};

/// Evaluates the joint objective on one batch. z_theta, z_phi and theta0
/// hold users in rows [0, num_users) and items after them. z_phi never
/// receives a gradient.
TotalLoss total_loss(const ObjectiveConfig& config, const PositiveBatch& batch,
                     const Matrix& z_theta, const Matrix& z_phi, const Matrix& theta0,
                     Index num_users);

/// Sorted unique copy of `ids`.
std::vector<Index> unique_sorted(std::span<const Index> ids);

}  // namespace twincl
