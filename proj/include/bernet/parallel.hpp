#pragma once

// Deterministic fork-join helper. Work is split into contiguous index chunks;
// callers write results into pre-sized slots (or combine per-chunk partials in
// chunk order), so results never depend on the worker count or scheduling.

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <thread>
#include <vector>

namespace bernet {

// Resolves a requested worker count: explicit value > BERNET_THREADS env var
// > hardware concurrency.
inline int resolve_threads(int requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("BERNET_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? int(hc) : 1;
}

// Invokes fn(begin, end) on disjoint subranges of [0, count) from `threads`
// workers. fn must only touch state owned by its index range.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  threads = std::max(1, threads);
  const std::size_t nchunk =
      std::min<std::size_t>(std::size_t(threads), std::max<std::size_t>(count, 1));
  if (nchunk <= 1 || count == 0) {
    fn(std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nchunk);
  const std::size_t step = (count + nchunk - 1) / nchunk;
  for (std::size_t c = 0; c < nchunk; ++c) {
    const std::size_t lo = c * step;
    const std::size_t hi = std::min(count, lo + step);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] { fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace bernet
