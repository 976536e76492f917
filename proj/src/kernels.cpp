#include "twincl/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace twincl::kernels {

namespace {

inline void spmm_row(const NormalizedAdjacency& adj, const Matrix& in, Matrix& out,
                     Index r) {
  auto dst = out.row(r);
  std::fill(dst.begin(), dst.end(), 0.0);
  for (Index p = adj.row_ptr[r]; p < adj.row_ptr[r + 1]; ++p) {
    const double w = adj.values[p];
    auto src = in.row(adj.col_idx[p]);
    for (Index k = 0; k < dst.size(); ++k) dst[k] += w * src[k];
  }
}

void check_shapes(const NormalizedAdjacency& adj, const Matrix& in, Matrix& out) {
  if (in.rows() != adj.dimension)
    throw Error("spmm: matrix has " + std::to_string(in.rows()) +
                " rows, adjacency dimension is " + std::to_string(adj.dimension));
  if (out.rows() != in.rows() || out.cols() != in.cols()) out = Matrix(in.rows(), in.cols());
}

}  // namespace

void spmm_serial(const NormalizedAdjacency& adj, const Matrix& in, Matrix& out) {
  check_shapes(adj, in, out);
  for (Index r = 0; r < adj.dimension; ++r) spmm_row(adj, in, out, r);
}

void spmm_parallel(const NormalizedAdjacency& adj, const Matrix& in, Matrix& out) {
  check_shapes(adj, in, out);
  const auto n = static_cast<std::ptrdiff_t>(adj.dimension);
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t r = 0; r < n; ++r) spmm_row(adj, in, out, static_cast<Index>(r));
}

namespace {

void check_same_shape(const Matrix& x, const Matrix& acc) {
  if (x.rows() != acc.rows() || x.cols() != acc.cols())
    throw Error("accumulate: shape mismatch");
}

}  // namespace

void accumulate_serial(const Matrix& x, Matrix& acc) {
  check_same_shape(x, acc);
  auto src = x.flat();
  auto dst = acc.flat();
  for (Index k = 0; k < src.size(); ++k) dst[k] += src[k];
}

void accumulate_parallel(const Matrix& x, Matrix& acc) {
  check_same_shape(x, acc);
  auto src = x.flat();
  auto dst = acc.flat();
  const auto n = static_cast<std::ptrdiff_t>(src.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) dst[k] += src[k];
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace twincl::kernels
