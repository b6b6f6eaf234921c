#pragma once

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace solarpipe {

// Worker count: SOLARPIPE_WORKERS env var if set, else hardware concurrency.
inline int default_worker_count() {
  if (const char* env = std::getenv("SOLARPIPE_WORKERS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Splits [0, count) into `workers` contiguous chunks and runs
// fn(begin, end) on each.  Chunk boundaries depend only on (count, workers),
// so any function that writes disjoint per-index outputs produces identical
// results for every worker count.
inline void parallel_for(int workers, std::int64_t count,
                         const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (count <= 0) return;
  if (workers < 1) workers = 1;
  if (workers == 1 || count == 1) {
    fn(0, count);
    return;
  }
  std::int64_t n_chunks = std::min<std::int64_t>(workers, count);
  std::int64_t base = count / n_chunks;
  std::int64_t rem = count % n_chunks;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_chunks));
  std::int64_t begin = 0;
  for (std::int64_t i = 0; i < n_chunks; ++i) {
    std::int64_t len = base + (i < rem ? 1 : 0);
    std::int64_t end = begin + len;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    begin = end;
  }
  for (auto& t : pool) t.join();
}

}  // namespace solarpipe
