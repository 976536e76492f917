#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "twincl/data.hpp"
#include "twincl/embeddings.hpp"
#include "twincl/eval.hpp"
#include "twincl/graph.hpp"
#include "twincl/objectives.hpp"
#include "twincl/optim.hpp"

namespace twincl {

struct TrainConfig {
  int epochs = 100;
  Index batch_size = 2048;
  ObjectiveConfig objective;
  double beta = 0.9;
  int layers = 3;
  Index dim = 64;
  double lr = 1e-3;
  std::uint64_t seed = 2024;
  int early_stop_patience = 10;
  Index log_every = 1;
  bool determinism = false;  // serial kernels everywhere

  void validate() const;
};

struct IterationRecord {
  std::uint64_t iteration = 0;
  LossComponents loss;
  double cos_sim = 0.0;
  double euclid_dist = 0.0;
  std::uint64_t propagation_calls = 0;  // during this iteration
};

struct EpochRecord {
  int epoch = 0;
  RankingReport metrics;
  double seconds = 0.0;
  std::uint64_t propagation_calls = 0;  // during this epoch's training
};

struct TrainLog {
  std::vector<IterationRecord> iterations;
  std::vector<EpochRecord> epochs;
  std::string aborted;  // diagnostic when training stopped on a non-finite loss
};

void write_iteration_csv(std::ostream& out, const TrainLog& log);
void write_epoch_csv(std::ostream& out, const TrainLog& log);

/// Shuffles the edges once and cuts them into consecutive batches; the last
/// batch may be short.
std::vector<PositiveBatch> sample_epoch_batches(std::span<const Edge> edges,
                                                Index batch_size, std::mt19937_64& rng);

/// Draws one negative per pair uniformly from items the user has not
/// interacted with in `user_items`.
void sample_negatives(PositiveBatch& batch, const ItemLists& user_items, Index num_items,
                      std::mt19937_64& rng);

/// Loss on one batch and its gradient with respect to layer-0 theta rows.
struct PipelineGradient {
  TotalLoss loss;
  SparseRows dtheta;
};

/// Forward both encoders, evaluate the joint objective, backpropagate through
/// propagation, and add the regularizer gradient. Costs three propagation
/// passes on `prop`.
PipelineGradient pipeline_gradient(Propagator& prop, const TwinState& twins,
                                   const PositiveBatch& batch,
                                   const ObjectiveConfig& objective);

/// One optimization step: pipeline_gradient, Adam on theta, momentum update
/// of phi. Throws TrainingAborted on a non-finite loss.
IterationRecord train_iteration(Propagator& prop, TwinState& twins, AdamState& adam,
                                const PositiveBatch& batch, const TrainConfig& config);

class TrainingAborted : public Error {
 public:
  using Error::Error;
};

struct TrainResult {
  TwinState best;  // snapshot at the epoch with the best validation NDCG@20
  Matrix final_z;  // propagated representations of best.theta
  TwinState twins;  // state at the end of training
  AdamState optimizer;
  TrainLog log;
  int best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains on splits.train with per-epoch validation and early stopping on
/// NDCG@20. Without a validation split the test split is evaluated for the
/// log only and the last epoch is returned.
TrainResult train(const DatasetSplits& splits, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Users' item lists used to mask and score evaluation on each split.
struct EvalLists {
  ItemLists train_mask;
  ItemLists ground_truth;
};
EvalLists validation_lists(const DatasetSplits& splits);
EvalLists test_lists(const DatasetSplits& splits);

}  // namespace twincl
