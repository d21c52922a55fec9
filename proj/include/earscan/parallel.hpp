#pragma once

#include <cstddef>
#include <functional>

namespace earscan {

/// 0 selects std::thread::hardware_concurrency().
void set_thread_count(unsigned threads);
unsigned thread_count();

/// Runs body(begin, end) over contiguous chunks of [0, n). Callers write only
/// to per-index outputs, so results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace earscan
