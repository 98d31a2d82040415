#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace gyro {

/// Calls fn(i, worker) for i in [0, n) on up to `threads` workers. Work is
/// split into contiguous blocks, so results written by index are independent
/// of the thread count. The first exception thrown is rethrown.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  threads = std::clamp(threads, 1, std::max(1, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i, 0);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      const int lo = n * w / threads, hi = n * (w + 1) / threads;
      try {
        for (int i = lo; i < hi; ++i) fn(i, w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace gyro
