#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mpbl {

inline std::size_t resolve_threads(std::size_t requested) noexcept {
  if (requested != 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// Runs body(k) for k in [0, count). Each index is handled exactly once, so
// results written to slot k do not depend on scheduling. The exception of
// the lowest failing index is rethrown after all workers stop.
template <class Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body) {
  threads = std::min(resolve_threads(threads), std::max<std::size_t>(count, 1));
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr first_error;
  std::size_t first_index = count;
  std::atomic<std::size_t> stop_after{count};
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      // Indices above a known failure cannot change which error is reported.
      if (k > stop_after.load()) continue;
      try {
        body(k);
      } catch (...) {
        std::lock_guard lock(mu);
        if (k < first_index) {
          first_index = k;
          first_error = std::current_exception();
          stop_after = k;
        }
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mpbl
