#pragma once

#include <cstddef>
#include <string>

// Kernel execution layer. Every hot loop in the library dispatches through
// parallel_for / reduce_sum so the whole solver can be flipped between a plain
// serial path and the OpenMP path at runtime. Reductions are computed over
// fixed-size blocks that are summed in index order, which makes the result
// bitwise identical in both modes and for any thread count.

namespace chns {
namespace par {

enum class Mode { Serial, OpenMP };

Mode mode();
void set_mode(Mode m);

// Number of worker threads the OpenMP path will use. Honors the CHNS_THREADS
// environment variable (read once) as an upper cap.
int thread_count();

std::string mode_name();

namespace detail {
void for_each_impl(std::size_t n, void (*fn)(std::size_t, void*), void* ctx);
double reduce_impl(std::size_t n, double (*block_fn)(std::size_t, std::size_t, void*), void* ctx);
constexpr std::size_t kReduceBlock = 2048;
} // namespace detail

template <class F>
void parallel_for(std::size_t n, F&& f) {
  auto thunk = [](std::size_t i, void* ctx) { (*static_cast<F*>(ctx))(i); };
  detail::for_each_impl(n, thunk, const_cast<void*>(static_cast<const void*>(&f)));
}

// Sums f(i) for i in [0, n). Accumulation happens in blocks of kReduceBlock
// consecutive indices; block partials are added left to right.
template <class F>
double reduce_sum(std::size_t n, F&& f) {
  auto block = [](std::size_t b, std::size_t e, void* ctx) {
    F& g = *static_cast<F*>(ctx);
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) s += g(i);
    return s;
  };
  return detail::reduce_impl(n, block, const_cast<void*>(static_cast<const void*>(&f)));
}

} // namespace par
} // namespace chns
