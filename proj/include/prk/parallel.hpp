#pragma once

#include <cstddef>
#include <functional>

namespace prk {

/// Worker count: hardware concurrency capped by PRKIT_THREADS when set.
int worker_threads();

/// Runs fn(i) for i in [0, n). Each index runs exactly once; the caller must
/// make per-index work independent. Results must not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace prk
