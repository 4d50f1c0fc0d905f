#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace waveq {

/// Worker count: WAVEFRONT_THREADS when set, hardware concurrency otherwise.
inline unsigned thread_budget() {
  if (const char* env = std::getenv("WAVEFRONT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

/// Run fn(task_index) for task_index in [0, n_tasks) across threads.
///
/// Tasks must derive all their randomness from the index (per-task rng
/// streams) and write only to per-task slots, so results do not depend on
/// the thread count or scheduling.
template <class Fn>
void parallel_tasks(std::int64_t n_tasks, Fn&& fn) {
  const unsigned workers = std::min<std::int64_t>(thread_budget(), n_tasks) > 0
                               ? static_cast<unsigned>(std::min<std::int64_t>(thread_budget(), n_tasks))
                               : 1u;
  if (workers <= 1) {
    for (std::int64_t k = 0; k < n_tasks; ++k) fn(k);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error = nullptr;
  std::atomic<bool> failed{false};
  std::mutex err_mutex;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::int64_t k = next.fetch_add(1);
        if (k >= n_tasks || failed.load()) return;
        try {
          fn(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace waveq
