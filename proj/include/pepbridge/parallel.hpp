// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace pepbridge {

/// Worker cap for parallel_for. 0 means std::thread::hardware_concurrency().
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs body(i) for i in [0, n). Work is split into contiguous chunks; each
/// index is processed exactly once, so any per-index output is independent of
/// the worker count. Exceptions from workers are rethrown on the caller
/// (the one from the lowest chunk wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace pepbridge
