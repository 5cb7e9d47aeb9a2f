#include "chns/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace chns {
namespace par {

namespace {

std::atomic<Mode> g_mode{Mode::OpenMP};

int resolve_threads() {
#ifdef _OPENMP
  int n = omp_get_max_threads();
#else
  int n = 1;
#endif
  if (const char* env = std::getenv("CHNS_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return std::max(1, n);
}

int cached_threads() {
  static int n = resolve_threads();
  return n;
}

} // namespace

Mode mode() { return g_mode.load(std::memory_order_relaxed); }
void set_mode(Mode m) { g_mode.store(m, std::memory_order_relaxed); }

int thread_count() {
#ifdef _OPENMP
  return mode() == Mode::OpenMP ? cached_threads() : 1;
#else
  return 1;
#endif
}

std::string mode_name() { return mode() == Mode::OpenMP ? "openmp" : "serial"; }

namespace detail {

void for_each_impl(std::size_t n, void (*fn)(std::size_t, void*), void* ctx) {
#ifdef _OPENMP
  if (g_mode.load(std::memory_order_relaxed) == Mode::OpenMP && n > 1) {
    const int nt = cached_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (long long i = 0; i < static_cast<long long>(n); ++i) fn(static_cast<std::size_t>(i), ctx);
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) fn(i, ctx);
}

double reduce_impl(std::size_t n, double (*block_fn)(std::size_t, std::size_t, void*), void* ctx) {
  if (n == 0) return 0.0;
  const std::size_t nblocks = (n + kReduceBlock - 1) / kReduceBlock;
  std::vector<double> partial(nblocks);
#ifdef _OPENMP
  if (g_mode.load(std::memory_order_relaxed) == Mode::OpenMP && nblocks > 1) {
    const int nt = cached_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (long long b = 0; b < static_cast<long long>(nblocks); ++b) {
      const std::size_t lo = static_cast<std::size_t>(b) * kReduceBlock;
      partial[static_cast<std::size_t>(b)] = block_fn(lo, std::min(n, lo + kReduceBlock), ctx);
    }
  } else
#endif
  {
    for (std::size_t b = 0; b < nblocks; ++b) {
      const std::size_t lo = b * kReduceBlock;
      partial[b] = block_fn(lo, std::min(n, lo + kReduceBlock), ctx);
    }
  }
  double s = 0.0;
  for (std::size_t b = 0; b < nblocks; ++b) s += partial[b];
  return s;
}

} // namespace detail
} // namespace par
} // namespace chns
