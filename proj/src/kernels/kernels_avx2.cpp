#include <immintrin.h>

#include <algorithm>

#include "hitlaw/kernels.hpp"

namespace hitlaw::kernels::avx2 {
namespace {

double horizontal_sum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

}  // namespace

void membership_mask(std::span<const Symbol> symbols, std::span<const std::int32_t> table,
                     std::span<std::uint64_t> bits) {
  const std::size_t n = symbols.size();
  std::fill(bits.begin(), bits.begin() + mask_words(n), 0);
  const auto* src = reinterpret_cast<const __m256i*>(symbols.data());
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256i idx = _mm256_loadu_si256(src + i / 8);
    const __m256i hit = _mm256_i32gather_epi32(table.data(), idx, 4);
    const auto lanes = static_cast<std::uint64_t>(_mm256_movemask_ps(_mm256_castsi256_ps(hit)));
    bits[i >> 6] |= lanes << (i & 63);
  }
  for (; i < n; ++i) {
    if (table[symbols[i]] != 0) bits[i >> 6] |= std::uint64_t{1} << (i & 63);
  }
}

void coincidence_mask(std::span<const std::span<const Symbol>> orbits,
                      std::span<std::uint64_t> bits) {
  const std::size_t n = orbits.empty() ? 0 : orbits.front().size();
  std::fill(bits.begin(), bits.begin() + mask_words(n), 0);
  const Symbol* first = orbits.empty() ? nullptr : orbits.front().data();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256i base = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(first + i));
    __m256i all = _mm256_set1_epi32(-1);
    for (std::size_t j = 1; j < orbits.size(); ++j) {
      const __m256i other =
          _mm256_loadu_si256(reinterpret_cast<const __m256i*>(orbits[j].data() + i));
      all = _mm256_and_si256(all, _mm256_cmpeq_epi32(base, other));
    }
    const auto lanes = static_cast<std::uint64_t>(_mm256_movemask_ps(_mm256_castsi256_ps(all)));
    bits[i >> 6] |= lanes << (i & 63);
  }
  for (; i < n; ++i) {
    bool equal = true;
    for (std::size_t j = 1; j < orbits.size() && equal; ++j) equal = orbits[j][i] == first[i];
    if (equal) bits[i >> 6] |= std::uint64_t{1} << (i & 63);
  }
}

void csr_matvec(const CsrView& m, std::span<const double> x, std::span<double> y) {
  const auto* idx = reinterpret_cast<const int*>(m.indices.data());
  for (std::size_t r = 0; r < m.rows; ++r) {
    std::size_t e = m.offsets[r];
    const std::size_t end = m.offsets[r + 1];
    __m256d acc = _mm256_setzero_pd();
    for (; e + 4 <= end; e += 4) {
      const __m128i cols = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + e));
      const __m256d xs = _mm256_i32gather_pd(x.data(), cols, 8);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(m.values.data() + e), xs, acc);
    }
    double tail = 0.0;
    for (; e < end; ++e) tail += m.values[e] * x[m.indices[e]];
    y[r] = horizontal_sum(acc) + tail;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc);
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return horizontal_sum(acc) + tail;
}

}  // namespace hitlaw::kernels::avx2
