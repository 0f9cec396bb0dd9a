#include <atomic>
#include <cstdlib>
#include <cstring>

#include "hitlaw/error.hpp"
#include "hitlaw/kernels.hpp"

namespace hitlaw::kernels {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(HITLAW_HAVE_AVX2)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() noexcept {
  // HITLAW_KERNELS=scalar pins the reference path (useful for bisecting).
  if (const char* env = std::getenv("HITLAW_KERNELS"); env && std::strcmp(env, "scalar") == 0) {
    return Backend::Scalar;
  }
  return best_available();
}

std::atomic<Backend>& current() noexcept {
  static std::atomic<Backend> backend{initial_backend()};
  return backend;
}

}  // namespace

std::string_view name(Backend backend) noexcept {
  return backend == Backend::Avx2 ? "avx2" : "scalar";
}

bool supported(Backend backend) noexcept {
  return backend == Backend::Scalar || cpu_has_avx2();
}

Backend best_available() noexcept { return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar; }

Backend active() noexcept { return current().load(std::memory_order_relaxed); }

void select(Backend backend) {
  if (!supported(backend)) {
    throw Error(ErrorCode::InvalidArgument, "kernel backend not supported: " + std::string(name(backend)));
  }
  current().store(backend, std::memory_order_relaxed);
}

#if defined(HITLAW_HAVE_AVX2)
#define HITLAW_DISPATCH(fn, ...) \
  (active() == Backend::Avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define HITLAW_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

void membership_mask(std::span<const Symbol> symbols, std::span<const std::int32_t> table,
                     std::span<std::uint64_t> bits) {
  HITLAW_DISPATCH(membership_mask, symbols, table, bits);
}

void coincidence_mask(std::span<const std::span<const Symbol>> orbits,
                      std::span<std::uint64_t> bits) {
  HITLAW_DISPATCH(coincidence_mask, orbits, bits);
}

void csr_matvec(const CsrView& m, std::span<const double> x, std::span<double> y) {
  HITLAW_DISPATCH(csr_matvec, m, x, y);
}

double dot(std::span<const double> a, std::span<const double> b) {
  return HITLAW_DISPATCH(dot, a, b);
}

#undef HITLAW_DISPATCH

}  // namespace hitlaw::kernels

#if !defined(HITLAW_HAVE_AVX2)
// Keep the avx2 namespace linkable on targets without it; the dispatcher never
// routes here because supported(Avx2) is false.
namespace hitlaw::kernels::avx2 {
void membership_mask(std::span<const Symbol> s, std::span<const std::int32_t> t,
                     std::span<std::uint64_t> b) {
  scalar::membership_mask(s, t, b);
}
void coincidence_mask(std::span<const std::span<const Symbol>> o, std::span<std::uint64_t> b) {
  scalar::coincidence_mask(o, b);
}
void csr_matvec(const CsrView& m, std::span<const double> x, std::span<double> y) {
  scalar::csr_matvec(m, x, y);
}
double dot(std::span<const double> a, std::span<const double> b) { return scalar::dot(a, b); }
}  // namespace hitlaw::kernels::avx2
#endif
