#include "twincl/optim.hpp"

#include <cmath>

namespace twincl {

AdamState AdamState::for_params(const Matrix& params, double lr) {
  AdamState s;
  s.m = Matrix(params.rows(), params.cols());
  s.v = Matrix(params.rows(), params.cols());
  s.lr = lr;
  return s;
}

void adam_step(Matrix& params, const SparseRows& grads, AdamState& state) {
  if (state.m.rows() != params.rows() || state.m.cols() != params.cols() ||
      state.v.rows() != params.rows() || state.v.cols() != params.cols())
    throw Error("adam_step: optimizer state does not match parameters");
  if (grads.values.rows() != grads.rows.size() ||
      (!grads.rows.empty() && grads.values.cols() != params.cols()))
    throw Error("adam_step: malformed sparse gradient");
  for (Index k = 0; k < grads.rows.size(); ++k) {
    if (grads.rows[k] >= params.rows()) throw Error("adam_step: gradient row out of range");
    if (k > 0 && grads.rows[k] <= grads.rows[k - 1])
      throw Error("adam_step: gradient rows must be sorted and unique");
  }
  for (double g : grads.values.flat())
    if (!std::isfinite(g)) throw Error("gradient overflow");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double bias1 = 1.0 - std::pow(b1, t);
  const double bias2 = 1.0 - std::pow(b2, t);
  const double step_size = state.lr / bias1;
  const double sqrt_bias2 = std::sqrt(bias2);

  const auto n = static_cast<std::ptrdiff_t>(grads.rows.size());
  // Row ids are unique, so rows can be updated independently.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t rs = 0; rs < n; ++rs) {
    const auto r = static_cast<Index>(rs);
    const Index row = grads.rows[r];
    auto g = grads.values.row(r);
    auto p = params.row(row);
    auto m = state.m.row(row);
    auto v = state.v.row(row);
    for (Index k = 0; k < g.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      p[k] -= step_size * m[k] / (std::sqrt(v[k]) / sqrt_bias2 + state.epsilon);
    }
  }
}

}  // namespace twincl
