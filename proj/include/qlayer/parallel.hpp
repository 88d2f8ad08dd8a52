#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace qlayer {

// Worker count used by the parallel loops below. Defaults to 1; the CLI sets
// it from --threads or QLAYER_THREADS.
void set_thread_count(int threads);
int thread_count();

// Runs body(i) for i in [0, count). Work is split into contiguous chunks; the
// body must only write to slots owned by index i.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

// Fixed-order pairwise summation. The result depends only on the order of
// the input, never on how the input was produced.
double pairwise_sum(std::span<const double> values);

}  // namespace qlayer
