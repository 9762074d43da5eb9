#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace bfnas {

// Runs fn(i) for every i in [0, count). With workers > 1 the index range is
// split into contiguous blocks, one thread each; every index is processed
// exactly once, so writes keyed by i are race-free and the combined result
// cannot depend on thread timing.
inline void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, count));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  int chunk = (count + workers - 1) / workers;
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    int lo = w * chunk;
    int hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    threads.emplace_back([&fn, lo, hi] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : threads) t.join();
}

}  // namespace bfnas
