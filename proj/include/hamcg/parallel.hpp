#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace hamcg {

/// Process-wide worker count used by parallel_for. 0 means hardware concurrency.
void set_thread_count(int n) noexcept;
int thread_count() noexcept;

/// Runs body(i) for i in [begin, end) over static contiguous chunks. Each index
/// is visited exactly once; bodies must write only to index-owned state, so the
/// result never depends on the worker count.
template <class Body>
void parallel_for(std::size_t begin, std::size_t end, Body&& body) {
  if (end <= begin) return;
  const std::size_t n = end - begin;
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1 || n < 256) {
    for (std::size_t i = begin; i < end; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t lo = begin + w * chunk, hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (std::size_t i = begin; i < std::min(end, begin + chunk); ++i) body(i);
  for (auto& t : pool) t.join();
}

}  // namespace hamcg
