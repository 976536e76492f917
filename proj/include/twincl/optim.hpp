#pragma once

#include <cstdint>

#include "twincl/matrix.hpp"

namespace twincl {

struct AdamState {
  Matrix m;
  Matrix v;
  std::uint64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Zero moments shaped like `params`.
  static AdamState for_params(const Matrix& params, double lr);
};

/// Lazy sparse Adam: bias-corrected update applied only to the rows listed in
/// `grads`; rows that are absent keep their parameters and stale moments.
/// Throws "gradient overflow" before touching anything if a gradient entry is
/// not finite.
void adam_step(Matrix& params, const SparseRows& grads, AdamState& state);

}  // namespace twincl
