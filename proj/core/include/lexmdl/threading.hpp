#ifndef LEXMDL_THREADING_HPP
#define LEXMDL_THREADING_HPP

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace lexmdl {

inline int default_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

// Runs fn(begin, end) over contiguous chunks of [0, n).  Chunk boundaries
// depend only on (n, threads), so per-chunk accumulation merged in chunk
// order is reproducible for a fixed thread count.  The first exception
// thrown by any chunk is rethrown on the calling thread.
inline void parallel_chunks(std::size_t n, int threads,
                            const std::function<void(std::size_t, std::size_t, int)>& fn) {
  if (threads <= 1 || n < 2) {
    fn(0, n, 0);
    return;
  }
  int used = static_cast<int>(std::min<std::size_t>(threads, n));
  std::vector<std::thread> pool;
  pool.reserve(used);
  std::exception_ptr error;
  std::mutex error_mu;
  for (int t = 0; t < used; ++t) {
    std::size_t begin = n * t / used;
    std::size_t end = n * (t + 1) / used;
    pool.emplace_back([&, begin, end, t] {
      try {
        fn(begin, end, t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace lexmdl

#endif  // LEXMDL_THREADING_HPP
