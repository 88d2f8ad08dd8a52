#include "qlayer/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace qlayer {

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int threads) { g_threads = std::max(1, threads); }

int thread_count() { return g_threads.load(); }

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(std::min<long>(thread_count(), static_cast<long>(count)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::mutex guard;
  std::size_t failed_at = count;
  std::exception_ptr failure;
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &body, &guard, &failed_at, &failure] {
      for (std::size_t i = begin; i < end; ++i) {
        try {
          body(i);
        } catch (...) {
          // keep the lowest failing index so the rethrown error is deterministic
          std::lock_guard lock(guard);
          if (i < failed_at) {
            failed_at = i;
            failure = std::current_exception();
          }
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace qlayer
