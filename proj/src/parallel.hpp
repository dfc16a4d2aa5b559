#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace psim::detail {

// Runs fn(i) for i in [0, n) on up to `workers` threads. fn must not throw.
// Workers stop picking new indices once *stop becomes true.
template <class F>
void parallel_for(std::size_t n, int workers, F&& fn, const std::atomic<bool>* stop = nullptr) {
  std::size_t count = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (;;) {
      if (stop && stop->load()) return;
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      fn(i);
    }
  };
  if (count == 1) {
    loop();
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(count);
  for (std::size_t t = 0; t < count; ++t) pool.emplace_back(loop);
}

}  // namespace psim::detail
