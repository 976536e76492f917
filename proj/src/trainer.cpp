#include "twincl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

namespace twincl {

void TrainConfig::validate() const {
  objective.validate();
  if (epochs < 0) throw Error("epochs must be non-negative");
  if (batch_size < 1) throw Error("batch size must be at least 1");
  if (early_stop_patience < 1) throw Error("patience must be at least 1");
  if (layers < 0) throw Error("layer count must be non-negative");
  if (dim < 1) throw Error("embedding dimension must be at least 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw Error("learning rate must be positive");
  if (!(beta >= 0.0 && beta < 1.0)) throw Error("momentum beta must lie in [0, 1)");
  if (log_every < 1) throw Error("log interval must be at least 1");
}

void write_iteration_csv(std::ostream& out, const TrainLog& log) {
  out << "iteration,loss_total,loss_align,loss_uniform,loss_cl,cos_sim,euclid_dist\n";
  out.precision(10);
  for (const auto& r : log.iterations) {
    out << r.iteration << ',' << r.loss.total << ',' << r.loss.align << ','
        << r.loss.uniform << ',' << r.loss.cl << ',' << r.cos_sim << ',' << r.euclid_dist
        << '\n';
  }
}

void write_epoch_csv(std::ostream& out, const TrainLog& log) {
  out << "epoch,recall@10,recall@20,recall@50,ndcg@10,ndcg@20,ndcg@50,seconds\n";
  out.precision(10);
  for (const auto& e : log.epochs) {
    const auto& m = e.metrics;
    out << e.epoch << ',' << m.recall_at(10) << ',' << m.recall_at(20) << ','
        << m.recall_at(50) << ',' << m.ndcg_at(10) << ',' << m.ndcg_at(20) << ','
        << m.ndcg_at(50) << ',' << e.seconds << '\n';
  }
}

std::vector<PositiveBatch> sample_epoch_batches(std::span<const Edge> edges,
                                                Index batch_size, std::mt19937_64& rng) {
  if (batch_size < 1) throw Error("batch size must be at least 1");
  std::vector<Edge> order(edges.begin(), edges.end());
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<PositiveBatch> batches;
  for (Index start = 0; start < order.size(); start += batch_size) {
    const Index end = std::min(order.size(), start + batch_size);
    PositiveBatch b;
    b.users.reserve(end - start);
    b.items.reserve(end - start);
    for (Index k = start; k < end; ++k) {
      b.users.push_back(order[k].first);
      b.items.push_back(order[k].second);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

void sample_negatives(PositiveBatch& batch, const ItemLists& user_items, Index num_items,
                      std::mt19937_64& rng) {
  std::uniform_int_distribution<Index> pick(0, num_items - 1);
  batch.negatives.resize(batch.size());
  for (Index r = 0; r < batch.size(); ++r) {
    const auto& seen = user_items[batch.users[r]];
    if (seen.size() >= num_items)
      throw Error("user " + std::to_string(batch.users[r]) + " has no negative items");
    Index cand;
    do {
      cand = pick(rng);
    } while (std::binary_search(seen.begin(), seen.end(), cand));
    batch.negatives[r] = cand;
  }
}

namespace {

// Rows of `m` holding any nonzero entry.
SparseRows nonzero_rows(const Matrix& m) {
  SparseRows out;
  for (Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    if (std::any_of(row.begin(), row.end(), [](double x) { return x != 0.0; }))
      out.rows.push_back(r);
  }
  out.values = gather_rows(m, out.rows);
  return out;
}

}  // namespace

PipelineGradient pipeline_gradient(Propagator& prop, const TwinState& twins,
                                   const PositiveBatch& batch,
                                   const ObjectiveConfig& objective) {
  const Matrix z_theta = prop.forward(twins.theta.values);
  const Matrix z_phi = prop.forward(twins.phi.values);
  PipelineGradient out;
  out.loss = total_loss(objective, batch, z_theta, z_phi, twins.theta.values,
                        twins.theta.num_users);

  Matrix dz(z_theta.rows(), z_theta.cols());
  const auto& sparse = out.loss.dz;
  for (Index r = 0; r < sparse.rows.size(); ++r) {
    auto src = sparse.values.row(r);
    std::copy(src.begin(), src.end(), dz.row(sparse.rows[r]).begin());
  }
  Matrix dtheta = prop.backward(dz);
  const auto& reg = out.loss.dtheta0;
  for (Index r = 0; r < reg.rows.size(); ++r) axpy(1.0, reg.values.row(r), dtheta.row(reg.rows[r]));
  out.dtheta = nonzero_rows(dtheta);
  return out;
}

IterationRecord train_iteration(Propagator& prop, TwinState& twins, AdamState& adam,
                                const PositiveBatch& batch, const TrainConfig& config) {
  const auto calls_before = prop.calls();
  auto grad = pipeline_gradient(prop, twins, batch, config.objective);
  if (!std::isfinite(grad.loss.parts.total)) {
    throw TrainingAborted("non-finite loss at iteration " +
                          std::to_string(twins.iteration + 1) +
                          " (align=" + std::to_string(grad.loss.parts.align) +
                          ", uniform=" + std::to_string(grad.loss.parts.uniform) +
                          ", cl=" + std::to_string(grad.loss.parts.cl) +
                          ", bpr=" + std::to_string(grad.loss.parts.bpr) + ")");
  }
  adam_step(twins.theta.values, grad.dtheta, adam);
  twin_update(twins);

  IterationRecord rec;
  rec.iteration = twins.iteration;
  rec.loss = grad.loss.parts;
  const auto div = encoder_divergence(twins.theta, twins.phi);
  rec.cos_sim = div.cosine_similarity;
  rec.euclid_dist = div.euclidean_distance;
  rec.propagation_calls = prop.calls() - calls_before;
  return rec;
}

EvalLists validation_lists(const DatasetSplits& splits) {
  return {to_item_lists(splits.train, splits.num_users),
          to_item_lists(splits.validation, splits.num_users)};
}

EvalLists test_lists(const DatasetSplits& splits) {
  std::vector<Edge> known = splits.train;
  known.insert(known.end(), splits.validation.begin(), splits.validation.end());
  return {to_item_lists(known, splits.num_users), to_item_lists(splits.test, splits.num_users)};
}

TrainResult train(const DatasetSplits& splits, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  const auto graph = build_graph(splits.train, splits.num_users, splits.num_items);
  const auto adj = normalized_adjacency(graph);
  const bool parallel = !config.determinism;
  Propagator prop(adj, config.layers, parallel);

  TrainResult result;
  result.twins = TwinState::from_initial(
      init_embeddings(splits.num_users, splits.num_items, config.dim, config.seed),
      config.beta);
  result.optimizer = AdamState::for_params(result.twins.theta.values, config.lr);
  result.best = result.twins;

  const bool has_validation = !splits.validation.empty();
  const auto eval = has_validation ? validation_lists(splits) : test_lists(splits);
  const auto user_items = user_item_lists(graph);
  const bool bpr = config.objective.variant == LossVariant::BPR;

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  double best_ndcg = -1.0;
  int stale = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto calls0 = prop.calls();
    auto batches = sample_epoch_batches(graph.edges, config.batch_size, rng);
    try {
      for (Index b = 0; b < batches.size(); ++b) {
        if (bpr) sample_negatives(batches[b], user_items, graph.num_items, rng);
        auto rec = train_iteration(prop, result.twins, result.optimizer, batches[b], config);
        const bool last = b + 1 == batches.size();
        if (rec.iteration == 1 || (rec.iteration - 1) % config.log_every == 0 || last)
          result.log.iterations.push_back(rec);
      }
    } catch (const TrainingAborted& e) {
      result.log.aborted = "epoch " + std::to_string(epoch) + ": " + e.what();
      break;
    }

    EpochRecord er;
    er.epoch = epoch;
    er.propagation_calls = prop.calls() - calls0;
    const Matrix z = propagate(adj, result.twins.theta.values, config.layers, false, parallel).z;
    er.metrics = rank_and_score(z, splits.num_users, eval.train_mask, eval.ground_truth,
                                kDefaultKs, {.parallel = parallel});
    er.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.epochs.push_back(er);
    if (on_epoch) on_epoch(er);

    if (!has_validation) {
      result.best = result.twins;
      result.best_epoch = epoch;
      continue;
    }
    const double ndcg = er.metrics.ndcg_at(20);
    if (ndcg > best_ndcg) {
      best_ndcg = ndcg;
      stale = 0;
      result.best = result.twins;
      result.best_epoch = epoch;
    } else if (++stale >= config.early_stop_patience) {
      break;
    }
  }
  result.final_z = propagate(adj, result.best.theta.values, config.layers, false, parallel).z;
  return result;
}

}  // namespace twincl
