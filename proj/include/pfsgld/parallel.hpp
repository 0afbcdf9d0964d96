#ifndef PFSGLD_PARALLEL_HPP_
#define PFSGLD_PARALLEL_HPP_

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace pfsgld {

inline int default_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

// Runs fn(0..n-1) across up to `threads` workers. Each index must write to
// its own output slot; results are then independent of scheduling.
inline void parallel_for(int n, int threads,
                         const std::function<void(int)>& fn) {
  if (threads < 1) threads = 1;
  if (threads == 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  const int k = std::min(threads, n);
  pool.reserve(k);
  for (int t = 0; t < k; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace pfsgld

#endif  // PFSGLD_PARALLEL_HPP_
