#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "hitlaw/error.hpp"
#include "hitlaw/kernels.hpp"
#include "hitlaw/linalg.hpp"

using namespace hitlaw;
namespace k = hitlaw::kernels;

namespace {

bool avx2_available() { return k::supported(k::Backend::Avx2); }

std::vector<Symbol> random_symbols(std::mt19937_64& rng, std::size_t n, Symbol alphabet) {
  std::uniform_int_distribution<Symbol> d(0, alphabet - 1);
  std::vector<Symbol> out(n);
  for (auto& s : out) s = d(rng);
  return out;
}

CsrMatrix random_csr(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double density) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> indices;
  std::vector<double> values;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (u(rng) < density) {
        indices.push_back(static_cast<std::uint32_t>(c));
        values.push_back(u(rng) - 0.3);
      }
    }
    offsets.push_back(indices.size());
  }
  return CsrMatrix(rows, cols, std::move(offsets), std::move(indices), std::move(values));
}

}  // namespace

TEST_CASE("backend selection") {
  CHECK(k::supported(k::Backend::Scalar));
  const char* forced = std::getenv("HITLAW_KERNELS");
  if (forced && std::string(forced) == "scalar") CHECK(k::active() == k::Backend::Scalar);
  else CHECK(k::active() == k::best_available());
  CHECK(k::name(k::Backend::Scalar) == "scalar");
  CHECK(k::name(k::Backend::Avx2) == "avx2");
  const auto before = k::active();
  k::select(k::Backend::Scalar);
  CHECK(k::active() == k::Backend::Scalar);
  if (!avx2_available()) {
    CHECK_THROWS_AS(k::select(k::Backend::Avx2), Error);
  }
  k::select(before);
}

TEST_CASE("membership mask: scalar and avx2 agree bit for bit") {
  if (!avx2_available()) return;
  std::mt19937_64 rng(17);
  for (Symbol alphabet : {2u, 3u, 7u, 64u}) {
    std::vector<std::int32_t> table(alphabet, 0);
    for (Symbol s = 0; s < alphabet; s += 2) table[s] = -1;
    for (std::size_t n : {0, 1, 7, 8, 9, 63, 64, 65, 127, 200, 1000, 4099}) {
      const auto sym = random_symbols(rng, n, alphabet);
      std::vector<std::uint64_t> a(k::mask_words(n) + 1, ~0ULL), b(k::mask_words(n) + 1, ~0ULL);
      k::scalar::membership_mask(sym, table, a);
      k::avx2::membership_mask(sym, table, b);
      for (std::size_t w = 0; w < k::mask_words(n); ++w) CHECK(a[w] == b[w]);
      for (std::size_t i = 0; i < n; ++i) {
        const bool bit = (a[i >> 6] >> (i & 63)) & 1u;
        CHECK(bit == (table[sym[i]] != 0));
      }
    }
  }
}

TEST_CASE("coincidence mask: scalar and avx2 agree bit for bit") {
  if (!avx2_available()) return;
  std::mt19937_64 rng(23);
  for (std::size_t orbits : {1, 2, 3, 5}) {
    for (std::size_t n : {0, 1, 8, 15, 64, 65, 333, 2048, 5001}) {
      std::vector<std::vector<Symbol>> data;
      for (std::size_t j = 0; j < orbits; ++j) data.push_back(random_symbols(rng, n, 2));
      std::vector<std::span<const Symbol>> views(data.begin(), data.end());
      std::vector<std::uint64_t> a(k::mask_words(n) + 1), b(k::mask_words(n) + 1);
      k::scalar::coincidence_mask(views, a);
      k::avx2::coincidence_mask(views, b);
      for (std::size_t w = 0; w < k::mask_words(n); ++w) CHECK(a[w] == b[w]);
    }
  }
}

TEST_CASE("csr matvec and dot: scalar and avx2 agree") {
  if (!avx2_available()) return;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t n : {1, 3, 4, 5, 16, 17, 100, 257}) {
    for (double density : {0.05, 0.5, 1.0}) {
      const CsrMatrix m = random_csr(rng, n, n, density);
      std::vector<double> x(n);
      for (auto& v : x) v = u(rng);
      std::vector<double> ya(n), yb(n);
      k::scalar::csr_matvec(m.view(), x, ya);
      k::avx2::csr_matvec(m.view(), x, yb);
      for (std::size_t i = 0; i < n; ++i) CHECK(ya[i] == doctest::Approx(yb[i]).epsilon(1e-13).scale(1.0));
      const double da = k::scalar::dot(x, ya);
      const double db = k::avx2::dot(x, ya);
      CHECK(da == doctest::Approx(db).epsilon(1e-13).scale(1.0));
    }
  }
}

TEST_CASE("dispatch uses the selected backend with identical results") {
  std::mt19937_64 rng(9);
  const CsrMatrix m = random_csr(rng, 50, 50, 0.3);
  std::vector<double> x(50, 0.5);
  const auto before = k::active();
  k::select(k::Backend::Scalar);
  const Vector ys = m.multiply(x);
  if (avx2_available()) {
    k::select(k::Backend::Avx2);
    const Vector yv = m.multiply(x);
    for (std::size_t i = 0; i < 50; ++i) CHECK(ys[i] == doctest::Approx(yv[i]).epsilon(1e-13));
  }
  k::select(before);
}
