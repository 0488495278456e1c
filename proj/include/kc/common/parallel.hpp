#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace kc {

// Runs fn(i) for i in [0, n) on at most `bound` worker threads. Results must
// be written to per-index slots by the caller, so output order never depends
// on scheduling. The first exception thrown by any task is rethrown after all
// workers join.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t bound, Fn&& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(bound, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace kc
