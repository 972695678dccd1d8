#pragma once

#include <cstddef>
#include <functional>

namespace qk::par {

/// Worker cap used by every parallel loop in the library.
unsigned thread_count();

/// Sets the worker cap. Zero restores the default: QKINETIC_THREADS if set, else 1.
void set_thread_count(unsigned n);

/// Parses QKINETIC_THREADS; returns `fallback` when unset or malformed.
unsigned threads_from_env(unsigned fallback);

/// Calls body(begin, end) for the fixed chunks [c*chunk, min(n,(c+1)*chunk)).
/// Chunk boundaries never depend on the thread count, so any per-chunk
/// result is identical no matter how many workers run.
void for_chunks(std::size_t n, std::size_t chunk,
                const std::function<void(std::size_t, std::size_t)>& body);

/// Sum of partial(begin, end) over fixed chunks, combined pairwise in a fixed
/// tree order. Bit-identical across thread counts.
double reduce_sum(std::size_t n, std::size_t chunk,
                  const std::function<double(std::size_t, std::size_t)>& partial);

}  // namespace qk::par
