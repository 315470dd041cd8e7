#pragma once

#include <atomic>
#include <thread>
#include <vector>

namespace moire {

/// Worker count used by the data-parallel sums.  Chunking is fixed, so
/// results are bitwise identical for every value.
inline int& thread_count() {
  static int count = 1;
  return count;
}
inline void set_thread_count(int k) { thread_count() = k < 1 ? 1 : k; }

/// Deterministic chunked in-place reduction: body(acc, i) adds the i-th term
/// into the chunk accumulator.  Terms are split into fixed-size chunks; each
/// chunk runs left to right and chunk totals combine in index order,
/// independent of the number of workers.
template <typename T, typename F>
T chunked_accumulate(long count, F&& body, T zero) {
  constexpr long chunk = 1024;
  if (count <= 0) return zero;
  const long nchunks = (count + chunk - 1) / chunk;
  std::vector<T> partial(static_cast<size_t>(nchunks), zero);

  auto run_chunk = [&](long c) {
    const long lo = c * chunk;
    const long hi = std::min(count, lo + chunk);
    T acc = zero;
    for (long i = lo; i < hi; ++i) body(acc, i);
    partial[static_cast<size_t>(c)] = std::move(acc);
  };

  const int workers = static_cast<int>(std::min<long>(thread_count(), nchunks));
  if (workers <= 1) {
    for (long c = 0; c < nchunks; ++c) run_chunk(c);
  } else {
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (long c = next.fetch_add(1); c < nchunks; c = next.fetch_add(1)) run_chunk(c);
      });
    for (auto& t : pool) t.join();
  }

  T total = zero;
  for (const T& p : partial) total += p;
  return total;
}

/// Deterministic chunked reduction of term(0) + ... + term(count-1).
template <typename T, typename F>
T chunked_sum(long count, F&& term, T zero) {
  return chunked_accumulate<T>(
      count, [&](T& acc, long i) { acc += term(i); }, zero);
}

}  // namespace moire
