#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference version and,
// where the target supports it, an AVX2 version. The public entry points
// dispatch to the backend selected at runtime; the per-backend namespaces are
// exposed so tests can check them against each other.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "hitlaw/types.hpp"

namespace hitlaw::kernels {

enum class Backend { Scalar, Avx2 };

std::string_view name(Backend backend) noexcept;
bool supported(Backend backend) noexcept;
Backend best_available() noexcept;
Backend active() noexcept;
/// Throws Error(InvalidArgument) when the backend is not supported here.
void select(Backend backend);

/// Read-only view of a CSR matrix.
struct CsrView {
  std::size_t rows = 0;
  std::span<const std::size_t> offsets;  // rows + 1 entries
  std::span<const std::uint32_t> indices;
  std::span<const double> values;
};

/// Number of 64-bit words needed to hold `count` bits.
constexpr std::size_t mask_words(std::size_t count) noexcept { return (count + 63) / 64; }

/// bit i of `bits` is set iff table[symbols[i]] != 0. `table` entries are 0 or
/// -1 and every symbol must index into it. Bits past symbols.size() are zero.
void membership_mask(std::span<const Symbol> symbols, std::span<const std::int32_t> table,
                     std::span<std::uint64_t> bits);

/// bit i is set iff all orbits agree at position i. All orbits share a length.
void coincidence_mask(std::span<const std::span<const Symbol>> orbits,
                      std::span<std::uint64_t> bits);

/// y = M x
void csr_matvec(const CsrView& m, std::span<const double> x, std::span<double> y);

double dot(std::span<const double> a, std::span<const double> b);

namespace scalar {
void membership_mask(std::span<const Symbol> symbols, std::span<const std::int32_t> table,
                     std::span<std::uint64_t> bits);
void coincidence_mask(std::span<const std::span<const Symbol>> orbits,
                      std::span<std::uint64_t> bits);
void csr_matvec(const CsrView& m, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
}  // namespace scalar

namespace avx2 {
void membership_mask(std::span<const Symbol> symbols, std::span<const std::int32_t> table,
                     std::span<std::uint64_t> bits);
void coincidence_mask(std::span<const std::span<const Symbol>> orbits,
                      std::span<std::uint64_t> bits);
void csr_matvec(const CsrView& m, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
}  // namespace avx2

}  // namespace hitlaw::kernels
