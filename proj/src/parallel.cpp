#include "urbanseg/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace urbanseg {

namespace {
std::atomic<unsigned> g_thread_cap{0};
constexpr std::size_t kMinChunk = 4096;
}  // namespace

void set_thread_cap(unsigned cap) noexcept { g_thread_cap = cap; }

unsigned thread_cap() noexcept {
  unsigned cap = g_thread_cap;
  if (cap == 0) cap = std::max(1u, std::thread::hardware_concurrency());
  return cap;
}

std::size_t chunk_count(std::size_t n) noexcept {
  if (n == 0) return 0;
  return std::clamp<std::size_t>(n / kMinChunk, 1, thread_cap());
}

void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  const std::size_t chunks = chunk_count(n);
  if (chunks == 0) return;
  if (chunks == 1) {
    fn(0, n, 0);
    return;
  }
  std::vector<std::exception_ptr> errors(chunks);
  {
    std::vector<std::jthread> workers;
    workers.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t begin = n * c / chunks;
      const std::size_t end = n * (c + 1) / chunks;
      workers.emplace_back([&, begin, end, c] {
        try {
          fn(begin, end, c);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace urbanseg
