#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace chainlens {

// Runs fn(i) for i in [0, n) across a worker pool. Callers write results into
// slot i, so output order is independent of scheduling. The first exception
// wins and is rethrown after all workers drain.
template <typename F>
void parallel_for(std::size_t n, F&& fn, unsigned thread_count = 0) {
  if (n == 0) return;
  unsigned hw = thread_count ? thread_count : std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (hw > n) hw = static_cast<unsigned>(n);
  if (hw == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(hw);
  for (unsigned t = 0; t < hw; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace chainlens
