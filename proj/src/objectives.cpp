#include "twincl/objectives.hpp"

#include <algorithm>
#include <cmath>

namespace twincl {

std::string to_string(LossVariant v) { return v == LossVariant::AU ? "au" : "bpr"; }

LossVariant parse_variant(const std::string& s) {
  if (s == "au") return LossVariant::AU;
  if (s == "bpr") return LossVariant::BPR;
  throw Error("unknown loss variant '" + s + "' (expected au or bpr)");
}

void ObjectiveConfig::validate() const {
  for (double w : {gamma, lambda_cl, lambda_reg}) {
    if (!std::isfinite(w) || w < 0.0)
      throw Error("loss weights must be finite and non-negative");
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error("tau must be positive");
  if (!(t_uniform > 0.0) || !std::isfinite(t_uniform))
    throw Error("uniformity temperature must be positive");
}

void NormalizedVector::jacobian_apply(std::span<const double> g,
                                      std::span<double> out) const {
  const double fg = dot(unit, g);
  for (Index k = 0; k < unit.size(); ++k) out[k] = (g[k] - unit[k] * fg) / norm;
}

NormalizedVector l2_normalize(std::span<const double> z) {
  NormalizedVector n;
  n.norm = std::sqrt(dot(z, z));
  // NaN passes through so a diverged run surfaces as a non-finite loss.
  if (n.norm == 0.0) throw Error("cannot normalize zero vector");
  n.unit.resize(z.size());
  for (Index k = 0; k < z.size(); ++k) n.unit[k] = z[k] / n.norm;
  return n;
}

namespace {

std::vector<NormalizedVector> normalize_rows(const Matrix& m) {
  std::vector<NormalizedVector> out;
  out.reserve(m.rows());
  for (Index r = 0; r < m.rows(); ++r) out.push_back(l2_normalize(m.row(r)));
  return out;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(std::string(what) + ": batch shapes differ");
}

double log1p_exp(double x) {
  // log(1 + e^x) without overflow
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Index position_of(const std::vector<Index>& sorted, Index id) {
  return static_cast<Index>(std::lower_bound(sorted.begin(), sorted.end(), id) -
                            sorted.begin());
}

}  // namespace

std::vector<Index> unique_sorted(std::span<const Index> ids) {
  std::vector<Index> out(ids.begin(), ids.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

LossAndGrad alignment_loss(const Matrix& users, const Matrix& items) {
  require_same_shape(users, items, "alignment_loss");
  const Index n = users.rows();
  const Index d = users.cols();
  LossAndGrad out;
  out.grad_users = Matrix(n, d);
  out.grad_items = Matrix(n, d);
  if (n == 0) return out;

  std::vector<double> diff(d);
  for (Index r = 0; r < n; ++r) {
    const auto fu = l2_normalize(users.row(r));
    const auto fi = l2_normalize(items.row(r));
    double sq = 0.0;
    for (Index k = 0; k < d; ++k) {
      diff[k] = fu.unit[k] - fi.unit[k];
      sq += diff[k] * diff[k];
    }
    out.value += sq;
    for (double& x : diff) x *= 2.0 / static_cast<double>(n);
    fu.jacobian_apply(diff, out.grad_users.row(r));
    for (double& x : diff) x = -x;
    fi.jacobian_apply(diff, out.grad_items.row(r));
  }
  out.value /= static_cast<double>(n);
  return out;
}

BlockLoss uniformity_block(const Matrix& rows, double t) {
  const Index n = rows.rows();
  const Index d = rows.cols();
  if (n < 2) throw Error("uniformity needs at least 2 distinct rows");
  const auto f = normalize_rows(rows);

  // row_sum[x] = sum_{y != x} w_xy, grad_f[x] = sum_{y != x} w_xy (f_x - f_y)
  std::vector<double> row_sum(n, 0.0);
  Matrix grad_f(n, d);
  const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t xs = 0; xs < nn; ++xs) {
    const auto x = static_cast<Index>(xs);
    auto gx = grad_f.row(x);
    double s = 0.0;
    for (Index y = 0; y < n; ++y) {
      if (y == x) continue;
      double sq = 0.0;
      for (Index k = 0; k < d; ++k) {
        const double diff = f[x].unit[k] - f[y].unit[k];
        sq += diff * diff;
      }
      const double w = std::exp(-t * sq);
      s += w;
      for (Index k = 0; k < d; ++k) gx[k] += w * (f[x].unit[k] - f[y].unit[k]);
    }
    row_sum[x] = s;
  }

  double total = 0.0;
  for (double s : row_sum) total += s;
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1);

  BlockLoss out;
  out.value = std::log(total / pairs);
  out.grad = Matrix(n, d);
  // d log S / d f_x = -4t / S * sum_y w_xy (f_x - f_y); each unordered pair
  // appears twice among ordered pairs.
  const double scale = -4.0 * t / total;
  std::vector<double> g(d);
  for (Index x = 0; x < n; ++x) {
    auto gx = grad_f.row(x);
    for (Index k = 0; k < d; ++k) g[k] = scale * gx[k];
    f[x].jacobian_apply(g, out.grad.row(x));
  }
  return out;
}

LossAndGrad uniformity_loss(const Matrix& users, const Matrix& items, double t) {
  auto bu = uniformity_block(users, t);
  auto bi = uniformity_block(items, t);
  LossAndGrad out;
  out.value = 0.5 * bu.value + 0.5 * bi.value;
  for (double& x : bu.grad.flat()) x *= 0.5;
  for (double& x : bi.grad.flat()) x *= 0.5;
  out.grad_users = std::move(bu.grad);
  out.grad_items = std::move(bi.grad);
  return out;
}

BlockLoss infonce_block(const Matrix& primary, const Matrix& twin, double tau,
                        bool normalize, bool mean) {
  require_same_shape(primary, twin, "infonce_loss");
  const Index n = primary.rows();
  const Index d = primary.cols();
  if (n == 0) throw Error("infonce_loss: empty batch");

  std::vector<NormalizedVector> p, q;
  if (normalize) {
    p = normalize_rows(primary);
    q = normalize_rows(twin);
  } else {
    for (Index r = 0; r < n; ++r) {
      p.push_back({{primary.row(r).begin(), primary.row(r).end()}, 1.0});
      q.push_back({{twin.row(r).begin(), twin.row(r).end()}, 1.0});
    }
  }

  std::vector<double> row_loss(n, 0.0);
  BlockLoss out;
  out.grad = Matrix(n, d);
  const double row_weight = mean ? 1.0 / static_cast<double>(n) : 1.0;
  const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t is = 0; is < nn; ++is) {
    const auto i = static_cast<Index>(is);
    std::vector<double> logits(n);
    double max_logit = -INFINITY;
    for (Index j = 0; j < n; ++j) {
      logits[j] = dot(p[i].unit, q[j].unit) / tau;
      max_logit = std::max(max_logit, logits[j]);
    }
    double z = 0.0;
    for (Index j = 0; j < n; ++j) z += std::exp(logits[j] - max_logit);
    row_loss[i] = max_logit + std::log(z) - logits[i];

    // d/dp_i = (sum_j softmax_ij q_j - q_i) / tau
    std::vector<double> g(d, 0.0);
    for (Index j = 0; j < n; ++j) {
      const double pj = std::exp(logits[j] - max_logit) / z;
      axpy(pj, q[j].unit, g);
    }
    axpy(-1.0, q[i].unit, g);
    for (double& x : g) x *= row_weight / tau;
    if (normalize) {
      p[i].jacobian_apply(g, out.grad.row(i));
    } else {
      std::copy(g.begin(), g.end(), out.grad.row(i).begin());
    }
  }
  for (double l : row_loss) out.value += l;
  out.value *= row_weight;
  return out;
}

LossAndGrad infonce_loss(const Matrix& users_primary, const Matrix& users_twin,
                         const Matrix& items_primary, const Matrix& items_twin,
                         double tau, bool normalize, bool mean) {
  auto bu = infonce_block(users_primary, users_twin, tau, normalize, mean);
  auto bi = infonce_block(items_primary, items_twin, tau, normalize, mean);
  LossAndGrad out;
  out.value = bu.value + bi.value;
  out.grad_users = std::move(bu.grad);
  out.grad_items = std::move(bi.grad);
  return out;
}

LossAndGrad bpr_loss(const Matrix& users, const Matrix& positives,
                     const Matrix& negatives) {
  require_same_shape(users, positives, "bpr_loss");
  require_same_shape(users, negatives, "bpr_loss");
  const Index n = users.rows();
  const Index d = users.cols();
  LossAndGrad out;
  out.grad_users = Matrix(n, d);
  out.grad_items = Matrix(n, d);
  out.grad_negatives = Matrix(n, d);
  if (n == 0) return out;

  const double inv_n = 1.0 / static_cast<double>(n);
  for (Index r = 0; r < n; ++r) {
    auto u = users.row(r);
    auto pos = positives.row(r);
    auto neg = negatives.row(r);
    const double margin = dot(u, pos) - dot(u, neg);
    out.value += log1p_exp(-margin);
    // d/d margin of -log sigmoid(margin) = -sigmoid(-margin)
    const double g = -sigmoid(-margin) * inv_n;
    auto gu = out.grad_users.row(r);
    auto gp = out.grad_items.row(r);
    auto gn = out.grad_negatives.row(r);
    for (Index k = 0; k < d; ++k) {
      gu[k] = g * (pos[k] - neg[k]);
      gp[k] = g * u[k];
      gn[k] = -g * u[k];
    }
  }
  out.value *= inv_n;
  return out;
}

Regularization l2_regularization(const Matrix& table, std::span<const Index> rows,
                                 double lambda) {
  Regularization out;
  out.grad.rows = unique_sorted(rows);
  out.grad.values = Matrix(out.grad.rows.size(), table.cols());
  for (Index r = 0; r < out.grad.rows.size(); ++r) {
    const Index id = out.grad.rows[r];
    if (id >= table.rows()) throw Error("l2_regularization: row out of range");
    auto src = table.row(id);
    auto dst = out.grad.values.row(r);
    for (Index k = 0; k < src.size(); ++k) {
      out.value += src[k] * src[k];
      dst[k] = 2.0 * lambda * src[k];
    }
  }
  out.value *= lambda;
  return out;
}

namespace {

// Accumulates per-batch-row gradients into the sparse dZ over global rows.
class GradientScatter {
 public:
  GradientScatter(const std::vector<Index>& rows, Index dim)
      : rows_(rows), values_(rows.size(), dim) {}

  void add(Index global_row, std::span<const double> g, double weight) {
    axpy(weight, g, values_.row(position_of(rows_, global_row)));
  }

  SparseRows finish() && { return {rows_, std::move(values_)}; }

 private:
  std::vector<Index> rows_;
  Matrix values_;
};

}  // namespace

TotalLoss total_loss(const ObjectiveConfig& config, const PositiveBatch& batch,
                     const Matrix& z_theta, const Matrix& z_phi, const Matrix& theta0,
                     Index num_users) {
  config.validate();
  const Index n = batch.size();
  if (n == 0) throw Error("total_loss: empty batch");
  if (batch.items.size() != n) throw Error("total_loss: ragged batch");
  const bool bpr = config.variant == LossVariant::BPR;
  if (bpr && batch.negatives.size() != n)
    throw Error("total_loss: BPR variant needs one negative per pair");
  const Index d = z_theta.cols();

  std::vector<Index> user_rows = batch.users;
  std::vector<Index> item_rows(n), neg_rows;
  for (Index r = 0; r < n; ++r) item_rows[r] = num_users + batch.items[r];
  if (bpr) {
    neg_rows.resize(n);
    for (Index r = 0; r < n; ++r) neg_rows[r] = num_users + batch.negatives[r];
  }
  const auto uniq_users = unique_sorted(user_rows);
  const auto uniq_items = unique_sorted(item_rows);

  std::vector<Index> touched = user_rows;
  touched.insert(touched.end(), item_rows.begin(), item_rows.end());
  touched.insert(touched.end(), neg_rows.begin(), neg_rows.end());
  GradientScatter dz(unique_sorted(touched), d);

  TotalLoss out;
  auto& parts = out.parts;

  const Matrix zu = gather_rows(z_theta, user_rows);
  const Matrix zi = gather_rows(z_theta, item_rows);
  if (bpr) {
    const Matrix zn = gather_rows(z_theta, neg_rows);
    auto l = bpr_loss(zu, zi, zn);
    parts.bpr = l.value;
    for (Index r = 0; r < n; ++r) {
      dz.add(user_rows[r], l.grad_users.row(r), 1.0);
      dz.add(item_rows[r], l.grad_items.row(r), 1.0);
      dz.add(neg_rows[r], l.grad_negatives.row(r), 1.0);
    }
  } else {
    auto a = alignment_loss(zu, zi);
    parts.align = a.value;
    for (Index r = 0; r < n; ++r) {
      dz.add(user_rows[r], a.grad_users.row(r), 1.0);
      dz.add(item_rows[r], a.grad_items.row(r), 1.0);
    }
    if (config.gamma > 0.0) {
      auto u = uniformity_loss(gather_rows(z_theta, uniq_users),
                               gather_rows(z_theta, uniq_items), config.t_uniform);
      parts.uniform = u.value;
      for (Index r = 0; r < uniq_users.size(); ++r)
        dz.add(uniq_users[r], u.grad_users.row(r), config.gamma);
      for (Index r = 0; r < uniq_items.size(); ++r)
        dz.add(uniq_items[r], u.grad_items.row(r), config.gamma);
    }
  }

  if (config.lambda_cl > 0.0) {
    auto c = infonce_loss(gather_rows(z_theta, uniq_users), gather_rows(z_phi, uniq_users),
                          gather_rows(z_theta, uniq_items), gather_rows(z_phi, uniq_items),
                          config.tau, config.cl_normalize, config.cl_mean);
    parts.cl = c.value;
    for (Index r = 0; r < uniq_users.size(); ++r)
      dz.add(uniq_users[r], c.grad_users.row(r), config.lambda_cl);
    for (Index r = 0; r < uniq_items.size(); ++r)
      dz.add(uniq_items[r], c.grad_items.row(r), config.lambda_cl);
  }

  // Regularize the layer-0 rows that feed the ranking term of this batch.
  auto reg = l2_regularization(theta0, touched, config.lambda_reg);
  parts.reg = reg.value;

  parts.total = parts.align + config.gamma * parts.uniform + config.lambda_cl * parts.cl +
                parts.bpr + parts.reg;
  out.dz = std::move(dz).finish();
  out.dtheta0 = std::move(reg.grad);
  return out;
}

}  // namespace twincl
