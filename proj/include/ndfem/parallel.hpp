#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace ndfem {

/// Number of worker threads, controlled by the NDFEM_NUM_THREADS environment
/// variable (default 1; values < 1 are clamped).
inline int num_threads() {
  if (const char* env = std::getenv("NDFEM_NUM_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

/// Static-partition parallel loop over [0, n). The body receives an index and
/// must only write to index-owned slots so results are deterministic
/// regardless of the thread count.
template <class Body>
void parallel_for(std::size_t n, const Body& body) {
  const int nt = num_threads();
  if (nt <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t chunk = (n + nt - 1) / nt;
  std::vector<std::thread> workers;
  workers.reserve(nt);
  for (int t = 0; t < nt; ++t) {
    const std::size_t lo = std::min(n, t * chunk);
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    workers.emplace_back([lo, hi, &body]() {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& w : workers) w.join();
}

}  // namespace ndfem
