#pragma once

#include <cstddef>
#include <functional>

namespace sgcl {

// Thread cap for row-parallel kernels. Read once from SGCL_THREADS; defaults
// to 1. Every kernel partitions work by output row, so results are identical
// for any thread count.
std::size_t thread_cap();
void set_thread_cap(std::size_t n);

// Calls fn(begin, end) over disjoint contiguous row ranges covering [0, n).
void parallel_rows(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace sgcl
