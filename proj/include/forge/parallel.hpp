#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace forge {

// Runs fn(i) for i in [0, n) on at most `concurrency` threads. Each index is
// handled exactly once; the first exception escaping fn is rethrown after all
// workers stop. Callers write results into pre-sized slots, so output order
// never depends on scheduling.
template <class Fn>
void parallel_for(std::size_t n, std::size_t concurrency, Fn&& fn) {
  concurrency = std::max<std::size_t>(1, std::min(concurrency, n));
  if (concurrency <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(n);
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(concurrency);
    for (std::size_t t = 0; t < concurrency; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace forge
