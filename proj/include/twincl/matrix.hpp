#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace twincl {

using Index = std::size_t;

/// Errors raised for invalid inputs or violated preconditions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles. Rows are node embeddings throughout.
class Matrix {
 public:
  Matrix() = default;
  Matrix(Index rows, Index cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> row(Index r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(Index r) const {
    return {data_.data() + r * cols_, cols_};
  }

  double& operator()(Index r, Index c) { return data_[r * cols_ + c]; }
  double operator()(Index r, Index c) const { return data_[r * cols_ + c]; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Matrix&) const = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("dot: dimension mismatch");
  double s = 0.0;
  for (Index k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (Index k = 0; k < x.size(); ++k) y[k] += alpha * x[k];
}

/// Copies the listed rows of `src` into a new matrix, in order.
inline Matrix gather_rows(const Matrix& src, std::span<const Index> rows) {
  Matrix out(rows.size(), src.cols());
  for (Index r = 0; r < rows.size(); ++r) {
    if (rows[r] >= src.rows()) throw Error("gather_rows: row out of range");
    auto from = src.row(rows[r]);
    std::copy(from.begin(), from.end(), out.row(r).begin());
  }
  return out;
}

/// Row-sparse gradient: sorted unique row ids and one d-vector per id.
struct SparseRows {
  std::vector<Index> rows;
  Matrix values;
};

}  // namespace twincl
