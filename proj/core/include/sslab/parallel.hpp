#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace sslab {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

// Runs fn(block) for every block in [0, n_blocks). Blocks are claimed through
// an atomic counter, so each write target must be owned by exactly one block;
// with that discipline the results do not depend on the thread count.
template <class Fn>
void parallel_blocks(uint64_t n_blocks, int threads, Fn&& fn) {
  threads = resolve_threads(threads);
  if (threads <= 1 || n_blocks <= 1) {
    for (uint64_t b = 0; b < n_blocks; ++b) fn(b);
    return;
  }
  if (static_cast<uint64_t>(threads) > n_blocks)
    threads = static_cast<int>(n_blocks);

  std::atomic<uint64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      uint64_t b = next.fetch_add(1, std::memory_order_relaxed);
      if (b >= n_blocks || failed.load(std::memory_order_relaxed)) return;
      try {
        fn(b);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads) - 1);
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace sslab
