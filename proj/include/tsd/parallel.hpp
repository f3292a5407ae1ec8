#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tsd {

/// Runs body(index) for index in [0, n) on `workers` threads and returns the
/// results in index order. Work is handed out in fixed-size chunks; since each
/// result only depends on its index, the output is identical for any worker count.
/// `make_state` builds per-worker scratch (e.g. a factor cache) passed to `body`.
template <typename Result, typename MakeState, typename Body>
std::vector<Result> parallel_map(std::uint64_t n, unsigned workers, MakeState make_state, Body body) {
  std::vector<Result> out(n);
  const unsigned threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::uint64_t>(n, 1))));
  constexpr std::uint64_t chunk = 64;
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto run = [&] {
    try {
      auto state = make_state();
      for (;;) {
        const std::uint64_t begin = next.fetch_add(chunk);
        if (begin >= n) break;
        const std::uint64_t end = std::min(n, begin + chunk);
        for (std::uint64_t i = begin; i < end; ++i) out[i] = body(state, i);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(n);
    }
  };

  if (threads == 1) {
    run();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(run);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace tsd
