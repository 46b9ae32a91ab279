#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace willmore {

/// Thread cap: min(hardware, WILLMORE_LAB_THREADS when set).
inline int thread_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("WILLMORE_LAB_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1 && cap < n) n = cap;
  }
  return n;
}

/// Block-parallel loop over [0, n).
inline void parallel_for(int n, const std::function<void(int, int)>& body) {
  int threads = thread_count();
  if (threads <= 1 || n < 256) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    int lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace willmore
