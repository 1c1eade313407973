#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

// Replica worker pool.  Replicas are claimed from an atomic counter and each
// one derives its own seed from (master seed, tag, replica index), so results
// are identical for every worker count.

namespace eastwalk {

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("EASTWALK_WORKERS")) {
    int w = std::atoi(env);
    if (w > 0) return w;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

template <class Fn>
void parallel_replicas(int replicas, int workers, Fn&& fn) {
  workers = resolve_workers(workers);
  if (workers <= 1 || replicas <= 1) {
    for (int r = 0; r < replicas; ++r) fn(r);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      try {
        while (!failed.load(std::memory_order_relaxed)) {
          int r = next.fetch_add(1, std::memory_order_relaxed);
          if (r >= replicas) break;
          fn(r);
        }
      } catch (...) {
        bool expected = false;
        if (failed.compare_exchange_strong(expected, true)) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace eastwalk
