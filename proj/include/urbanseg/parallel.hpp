#pragma once

#include <cstddef>
#include <functional>

namespace urbanseg {

/// Process-wide cap on worker threads (0 = hardware concurrency).
void set_thread_cap(unsigned cap) noexcept;
unsigned thread_cap() noexcept;

/// Calls fn(begin, end, chunk) over contiguous chunks of [0, n). Chunk
/// boundaries depend only on n and the cap, so callers that combine per-chunk
/// partials in chunk order get the same result on every run with that cap.
void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

/// Number of chunks parallel_chunks will use for n items.
std::size_t chunk_count(std::size_t n) noexcept;

}  // namespace urbanseg
