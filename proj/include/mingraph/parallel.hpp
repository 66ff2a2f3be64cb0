#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace mingraph {

/// Worker count used by parallel_for. Defaults to the MINIGRAPH_THREADS
/// environment variable, else the hardware concurrency.
int thread_count();
void set_thread_count(int threads);

/// Runs body(i) for i in [0, count) over statically partitioned chunks.
/// Each index is visited exactly once, so per-index outputs are identical
/// for every thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

/// Pairwise (tree) summation; the reduction order depends only on the length.
double pairwise_sum(std::span<const double> values);

}  // namespace mingraph
