#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hitlaw/kernels.hpp"
#include "hitlaw/types.hpp"

namespace hitlaw {

/// Compressed sparse row matrix; column indices are sorted within each row.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> offsets,
            std::vector<std::uint32_t> indices, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nonzeros() const noexcept { return indices_.size(); }

  std::span<const std::size_t> offsets() const noexcept { return offsets_; }
  std::span<const std::uint32_t> indices() const noexcept { return indices_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<const std::uint32_t> row_indices(std::size_t r) const noexcept;
  std::span<const double> row_values(std::size_t r) const noexcept;

  /// Entry (r, c), zero when not stored.
  double at(std::size_t r, std::size_t c) const noexcept;

  CsrMatrix transposed() const;

  /// y = M x
  void multiply(std::span<const double> x, std::span<double> y) const;
  Vector multiply(std::span<const double> x) const;

  kernels::CsrView view() const noexcept;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::uint32_t> indices_;
  std::vector<double> values_;
};

struct PerronOptions {
  double tolerance = 1e-12;         // relative residual |Mw - lw|_inf / l
  std::size_t max_iterations = 1'000'000;
};

struct PerronResult {
  double eigenvalue = 0.0;
  Vector right;  // M w = l w, unit 1-norm
  Vector left;   // u^T M = l u^T, unit 1-norm
  double right_residual = 0.0;
  double left_residual = 0.0;
  std::size_t iterations = 0;
};

/// Perron root and positive eigenvectors of a nonnegative primitive matrix by
/// power iteration on M and on its transpose. `primitive` is the caller's
/// structural flag (irreducible and aperiodic); false raises NotPrimitive.
PerronResult perron(const CsrMatrix& m, bool primitive, const PerronOptions& options = {});

double norm_inf(std::span<const double> v) noexcept;
double sum(std::span<const double> v) noexcept;

}  // namespace hitlaw
