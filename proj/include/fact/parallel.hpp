#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fact {

// Runs body(i) for i in [0, count) on up to `workers` threads. Work items are
// claimed dynamically; callers write results into per-item slots so the output
// never depends on the schedule. The first exception thrown by any item is
// rethrown on the calling thread after all workers join.
template <typename Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body) {
  workers = std::max(1u, workers);
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const auto spawn = std::min<std::size_t>(workers, count);
    pool.reserve(spawn);
    for (std::size_t w = 0; w < spawn; ++w) pool.emplace_back(run);
  }
  if (failure) std::rethrow_exception(failure);
}

// Fixed block size for Monte Carlo reductions. Partial sums are formed per
// block and combined in block order, so results are bit-identical for any
// worker count.
inline constexpr std::size_t kReductionBlock = 1024;

inline std::size_t block_count(std::size_t items) {
  return (items + kReductionBlock - 1) / kReductionBlock;
}

}  // namespace fact
