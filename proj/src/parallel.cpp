#include "sgcl/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace sgcl {
namespace {

std::size_t read_env_cap() {
  if (const char* env = std::getenv("SGCL_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  return 1;
}

std::atomic<std::size_t>& cap_storage() {
  static std::atomic<std::size_t> cap{read_env_cap()};
  return cap;
}

// Below this many rows the thread start-up cost dominates.
constexpr std::size_t kMinRowsPerThread = 256;

}  // namespace

std::size_t thread_cap() { return cap_storage().load(); }

void set_thread_cap(std::size_t n) { cap_storage().store(std::max<std::size_t>(1, n)); }

void parallel_rows(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
  const std::size_t threads = std::min(thread_cap(), std::max<std::size_t>(1, n / kMinRowsPerThread));
  if (threads <= 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 1; t < threads; ++t) {
    const std::size_t b = t * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b < e) pool.emplace_back(fn, b, e);
  }
  fn(0, std::min(n, chunk));
  for (auto& th : pool) th.join();
}

}  // namespace sgcl
