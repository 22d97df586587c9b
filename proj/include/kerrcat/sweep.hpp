#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <type_traits>
#include <vector>

namespace kerrcat {

/// Worker count for grid sweeps; 0 means std::thread::hardware_concurrency().
struct SweepOptions {
  unsigned workers = 1;
};

inline unsigned resolve_workers(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Evaluates f over grid, possibly on several threads. Results come back in
/// grid order, so the output does not depend on the worker count.
/// The first exception thrown by any evaluation is rethrown.
template <class T, class F>
auto parallel_map(std::span<const T> grid, F&& f, unsigned workers)
    -> std::vector<std::invoke_result_t<F&, const T&>> {
  using R = std::invoke_result_t<F&, const T&>;
  std::vector<R> out(grid.size());
  const unsigned n_workers = std::min<unsigned>(resolve_workers(workers), static_cast<unsigned>(grid.size()));
  if (n_workers <= 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = f(grid[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= grid.size()) return;
      try {
        out[i] = f(grid[i]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(grid.size());
        return;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace kerrcat
