#include <algorithm>

#include "hitlaw/kernels.hpp"

namespace hitlaw::kernels::scalar {

void membership_mask(std::span<const Symbol> symbols, std::span<const std::int32_t> table,
                     std::span<std::uint64_t> bits) {
  std::fill(bits.begin(), bits.begin() + mask_words(symbols.size()), 0);
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (table[symbols[i]] != 0) bits[i >> 6] |= std::uint64_t{1} << (i & 63);
  }
}

void coincidence_mask(std::span<const std::span<const Symbol>> orbits,
                      std::span<std::uint64_t> bits) {
  const std::size_t length = orbits.empty() ? 0 : orbits.front().size();
  std::fill(bits.begin(), bits.begin() + mask_words(length), 0);
  for (std::size_t i = 0; i < length; ++i) {
    const Symbol first = orbits.front()[i];
    bool equal = true;
    for (std::size_t j = 1; j < orbits.size() && equal; ++j) equal = orbits[j][i] == first;
    if (equal) bits[i >> 6] |= std::uint64_t{1} << (i & 63);
  }
}

void csr_matvec(const CsrView& m, std::span<const double> x, std::span<double> y) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    double acc = 0.0;
    for (std::size_t e = m.offsets[r]; e < m.offsets[r + 1]; ++e) acc += m.values[e] * x[m.indices[e]];
    y[r] = acc;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace hitlaw::kernels::scalar
