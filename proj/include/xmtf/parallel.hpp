#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace xmtf {

// Splits [0, count) into contiguous chunks and runs fn(begin, end) on up to
// `jobs` threads. Callers that write per-index slots, or merge per-chunk
// results with order-independent operations (integer tallies), produce
// identical output for every jobs value. The exception from the
// lowest-indexed failing chunk is rethrown.
inline void parallel_chunks(
    std::size_t count, std::size_t jobs,
    const std::function<void(std::size_t, std::size_t)>& fn) {
  if (count == 0) return;
  if (jobs == 0) jobs = 1;
  const std::size_t workers = jobs < count ? jobs : count;
  if (workers <= 1) {
    fn(0, count);
    return;
  }
  const std::size_t chunk = (count + workers - 1) / workers;
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = begin + chunk < count ? begin + chunk : count;
    if (begin >= end) break;
    threads.emplace_back([&fn, &errors, w, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : threads) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Per-index variant of the above.
inline void parallel_for(std::size_t count, std::size_t jobs,
                         const std::function<void(std::size_t)>& fn) {
  parallel_chunks(count, jobs, [&fn](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
  });
}

}  // namespace xmtf
