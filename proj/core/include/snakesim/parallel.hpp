#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

namespace snakesim {

/// Worker count from SNAKESIM_WORKERS, else hardware concurrency (at least 1).
unsigned default_workers();

/// Runs fn(i) for i in [0, count) on `workers` threads (0 = default). Each
/// index writes only its own slot, so results never depend on scheduling.
/// Exceptions are captured per index.
template <class Fn>
std::vector<std::exception_ptr> parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
  if (workers == 0) workers = default_workers();
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t nthreads = std::min<std::size_t>(workers, count);
  if (nthreads <= 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
  }
  return errors;
}

/// Ordered map over replicate indices; rethrows the lowest-index failure.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t count, unsigned workers, Fn&& fn) {
  std::vector<std::optional<T>> slots(count);
  auto errors = parallel_for(count, workers, [&](std::size_t i) { slots[i].emplace(fn(i)); });
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<T> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace snakesim
