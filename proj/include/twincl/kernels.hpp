#pragma once

#include "twincl/graph.hpp"
#include "twincl/matrix.hpp"

// Sparse propagation kernels. Every kernel has a serial reference and an
// OpenMP version that parallelizes over output rows. Each output row is
// reduced in CSR column order by exactly one thread, so both versions are
// bit-identical regardless of thread count.
namespace twincl::kernels {

/// out = adj * in. `out` is resized as needed.
void spmm_serial(const NormalizedAdjacency& adj, const Matrix& in, Matrix& out);
void spmm_parallel(const NormalizedAdjacency& adj, const Matrix& in, Matrix& out);

/// acc += x, elementwise.
void accumulate_serial(const Matrix& x, Matrix& acc);
void accumulate_parallel(const Matrix& x, Matrix& acc);

/// Number of OpenMP threads available to the parallel kernels (1 without OpenMP).
int max_threads();

}  // namespace twincl::kernels
