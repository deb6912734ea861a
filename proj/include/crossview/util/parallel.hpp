// SPDX-FileCopyrightText: 2026 crossview authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace crossview {

/// Run `process(i)` for i in [0, n) on a bounded worker pool and hand each
/// result to `commit(i, result)` on the calling thread, strictly in index
/// order. Output therefore does not depend on the worker count.
template <typename Result, typename Process, typename Commit>
inline void parallel_ordered(std::size_t n, unsigned workers, Process process,
                             Commit commit) {
  if (n == 0) return;
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) commit(i, process(i));
    return;
  }

  std::vector<std::optional<Result>> ready(n);
  std::mutex mutex;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        Result r = process(i);
        std::lock_guard lock(mutex);
        ready[i] = std::move(r);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!error) error = std::current_exception();
        next.store(n);  // stop scheduling further work
      }
      cv.notify_all();
    }
  };

  std::vector<std::thread> pool;
  const unsigned count = std::min<unsigned>(workers, static_cast<unsigned>(n));
  pool.reserve(count);
  for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);

  {
    std::unique_lock lock(mutex);
    for (std::size_t i = 0; i < n; ++i) {
      cv.wait(lock, [&] { return ready[i].has_value() || error; });
      if (error) break;
      Result r = std::move(*ready[i]);
      ready[i].reset();
      lock.unlock();
      commit(i, std::move(r));
      lock.lock();
    }
  }

  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace crossview
