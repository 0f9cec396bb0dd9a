#include "hitlaw/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hitlaw/error.hpp"

namespace hitlaw {

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> offsets,
                     std::vector<std::uint32_t> indices, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      offsets_(std::move(offsets)),
      indices_(std::move(indices)),
      values_(std::move(values)) {
  if (offsets_.size() != rows_ + 1 || offsets_.back() != indices_.size() ||
      indices_.size() != values_.size()) {
    throw Error(ErrorCode::InvalidArgument, "inconsistent CSR arrays");
  }
}

std::span<const std::uint32_t> CsrMatrix::row_indices(std::size_t r) const noexcept {
  return std::span(indices_).subspan(offsets_[r], offsets_[r + 1] - offsets_[r]);
}

std::span<const double> CsrMatrix::row_values(std::size_t r) const noexcept {
  return std::span(values_).subspan(offsets_[r], offsets_[r + 1] - offsets_[r]);
}

double CsrMatrix::at(std::size_t r, std::size_t c) const noexcept {
  const auto cols = row_indices(r);
  const auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<std::uint32_t>(c));
  if (it == cols.end() || *it != c) return 0.0;
  return values_[offsets_[r] + static_cast<std::size_t>(it - cols.begin())];
}

CsrMatrix CsrMatrix::transposed() const {
  std::vector<std::size_t> offsets(cols_ + 1, 0);
  for (auto c : indices_) ++offsets[c + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  std::vector<std::uint32_t> indices(indices_.size());
  std::vector<double> values(values_.size());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t e = offsets_[r]; e < offsets_[r + 1]; ++e) {
      const std::size_t slot = cursor[indices_[e]]++;
      indices[slot] = static_cast<std::uint32_t>(r);
      values[slot] = values_[e];
    }
  }
  return CsrMatrix(cols_, rows_, std::move(offsets), std::move(indices), std::move(values));
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  kernels::csr_matvec(view(), x, y);
}

Vector CsrMatrix::multiply(std::span<const double> x) const {
  Vector y(rows_);
  multiply(x, y);
  return y;
}

kernels::CsrView CsrMatrix::view() const noexcept {
  return kernels::CsrView{rows_, offsets_, indices_, values_};
}

double norm_inf(std::span<const double> v) noexcept {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double sum(std::span<const double> v) noexcept {
  return std::accumulate(v.begin(), v.end(), 0.0);
}

namespace {

struct PowerResult {
  double eigenvalue;
  Vector vector;
  double residual;
  std::size_t iterations;
};

double residual_of(const CsrMatrix& m, std::span<const double> v, double lambda, Vector& scratch) {
  m.multiply(v, scratch);
  double r = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) r = std::max(r, std::abs(scratch[i] - lambda * v[i]));
  return r / lambda;
}

// Power iteration on a primitive matrix with 1-norm scaling. The Collatz-Wielandt
// ratio bounds (min/max of (Mv)_i / v_i) bracket the Perron root; iteration stops
// on the relative residual, or when the residual has stalled at round-off.
PowerResult power_iterate(const CsrMatrix& m, const PerronOptions& options) {
  const std::size_t n = m.rows();
  Vector v(n, 1.0 / static_cast<double>(n));
  Vector next(n);
  Vector scratch(n);
  double lambda = 0.0;
  double best_residual = INFINITY;
  std::size_t stalled = 0;
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    m.multiply(v, next);
    const double mass = sum(next);
    if (!(mass > 0.0) || !std::isfinite(mass)) {
      throw Error(ErrorCode::NotPrimitive, "power iteration reached the zero vector");
    }
    lambda = mass;  // v has unit 1-norm and is nonnegative
    for (std::size_t i = 0; i < n; ++i) v[i] = next[i] / mass;
    if (it % 8 == 0 || n <= 64) {
      const double residual = residual_of(m, v, lambda, scratch);
      if (residual <= options.tolerance * 1e-2) {
        return {lambda, v, residual, it};
      }
      if (residual < best_residual * 0.999) {
        best_residual = residual;
        stalled = 0;
      } else if (++stalled > 64) {
        if (best_residual <= options.tolerance) return {lambda, v, residual, it};
        throw Error(ErrorCode::NotPrimitive, "power iteration does not contract (periodic matrix?)");
      }
    }
  }
  const double residual = residual_of(m, v, lambda, scratch);
  if (residual <= options.tolerance) return {lambda, v, residual, options.max_iterations};
  throw Error(ErrorCode::NoConvergence, "power iteration cap exceeded");
}

}  // namespace

PerronResult perron(const CsrMatrix& m, bool primitive, const PerronOptions& options) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorCode::NotSquare, "perron needs a nonempty square matrix");
  }
  if (!primitive) throw Error(ErrorCode::NotPrimitive, "matrix is not irreducible and aperiodic");
  for (double value : m.values()) {
    if (value < 0.0 || !std::isfinite(value)) {
      throw Error(ErrorCode::InvalidArgument, "perron needs finite nonnegative entries");
    }
  }
  const PowerResult right = power_iterate(m, options);
  const CsrMatrix mt = m.transposed();
  const PowerResult left = power_iterate(mt, options);

  PerronResult out;
  out.right = right.vector;
  out.left = left.vector;
  // Two-sided Rayleigh quotient u^T M w / u^T w: second-order accurate.
  const Vector mw = m.multiply(out.right);
  out.eigenvalue = kernels::dot(out.left, mw) / kernels::dot(out.left, out.right);
  Vector scratch(m.rows());
  out.right_residual = residual_of(m, out.right, out.eigenvalue, scratch);
  out.left_residual = residual_of(mt, out.left, out.eigenvalue, scratch);
  out.iterations = right.iterations + left.iterations;
  return out;
}

}  // namespace hitlaw
