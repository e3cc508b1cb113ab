#pragma once

#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "claimrank/io.hpp"

namespace claimrank {

// Worker cap: CLAIMRANK_THREADS when set, hardware concurrency otherwise.
inline std::size_t worker_count(std::size_t jobs) {
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CLAIMRANK_THREADS")) {
    const long long requested = parse_int(env, "CLAIMRANK_THREADS");
    if (requested < 1) throw ConfigError("CLAIMRANK_THREADS must be >= 1");
    workers = static_cast<std::size_t>(requested);
  }
  return std::min(workers, std::max<std::size_t>(jobs, 1));
}

// Runs fn(i) for i in [0, n) across workers. Each index is handled exactly
// once; callers write into per-index slots, so results are ordered and
// independent of the worker count. The first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  if (n == 0) return;
  const std::size_t workers = worker_count(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace claimrank
