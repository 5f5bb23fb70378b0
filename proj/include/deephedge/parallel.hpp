#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace deephedge {

/// Runs fn(chunk) for chunk in [0, n_chunks) on up to `threads` workers.
/// Chunks are independent; callers reduce results in chunk order, so the
/// outcome never depends on the schedule. threads <= 1 runs inline.
template <class Fn>
void parallel_for_chunks(std::size_t n_chunks, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || n_chunks <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) fn(c);
    return;
  }
  const std::size_t workers = std::min(threads, n_chunks);
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t c = w; c < n_chunks; c += workers) {
        try {
          fn(c);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace deephedge
