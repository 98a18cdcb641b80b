// Copyright 2026 The SyncLab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace synclab {

// Worker count: SYNCLAB_THREADS when set (>= 1), else hardware concurrency.
std::size_t thread_count();

// Runs fn(i) for i in [0, n). Work is split into contiguous blocks, so
// results written by index are independent of scheduling. The first
// exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace synclab
