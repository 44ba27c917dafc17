#include "robustrl/common/parallel.hpp"

#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace robustrl {

int resolve_workers(int requested) {
  int n = requested > 0 ? requested : 1;
  if (const char* cap = std::getenv("ROBUSTRL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(cap, &end, 10);
    if (end != cap && *end == '\0' && v > 0 && v < 1 << 16) {
      if (v < n) n = static_cast<int>(v);
    }
  }
  return n;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t w = static_cast<std::size_t>(workers > 0 ? workers : 1);
  if (w <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  const std::size_t used = w < n ? w : n;
  std::vector<std::thread> threads;
  threads.reserve(used);
  std::exception_ptr first_error;
  std::mutex error_mutex;

  const std::size_t chunk = (n + used - 1) / used;
  for (std::size_t t = 0; t < used; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace robustrl
