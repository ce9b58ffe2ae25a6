#pragma once

#include "endogeo/core.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace endogeo {

/// Worker count from ENDOGEO_THREADS (0 or unset = hardware concurrency).
int worker_count();

/// Runs body(i) for i in [0, n) over contiguous chunks. Each index is visited
/// exactly once, so outputs written per index do not depend on the thread
/// count. The first exception thrown by any worker is rethrown.
template <typename Body>
void parallel_for(Index n, Body&& body) {
  const Index workers = std::min<Index>(worker_count(), n);
  if (workers <= 1) {
    for (Index i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  const Index chunk = (n + workers - 1) / workers;
  for (Index w = 0; w < workers; ++w) {
    const Index begin = w * chunk;
    const Index end = std::min(n, begin + chunk);
    threads.emplace_back([&, begin, end] {
      try {
        for (Index i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace endogeo
