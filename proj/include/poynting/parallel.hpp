#pragma once

#include <cstddef>
#include <functional>

namespace poynting::parallel {

/// Number of worker threads used by stencil sweeps and reductions (>= 1).
[[nodiscard]] int thread_count() noexcept;
void set_thread_count(int threads);

/// When set, every reduction sums in a fixed sequential order so results do
/// not depend on the thread count. Defaults to true.
[[nodiscard]] bool deterministic() noexcept;
void set_deterministic(bool on) noexcept;

/// Resolves the thread count from an explicit request (> 0) or the
/// POYNTING_THREADS environment variable, falling back to 1.
[[nodiscard]] int resolve_thread_count(int requested);

/// Runs body(begin, end) over contiguous chunks of [0, n). Chunks are the
/// z-slab partition when called with n = number of slabs.
void for_range(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

/// Total of chunk_sum(begin, end) over a partition of [0, n). Deterministic
/// mode evaluates the single chunk [0, n) so the summation order is fixed;
/// otherwise each thread sums its own chunk.
[[nodiscard]] double reduce_sum(std::size_t n, const std::function<double(std::size_t, std::size_t)>& chunk_sum);

}  // namespace poynting::parallel
