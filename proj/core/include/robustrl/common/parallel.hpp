#pragma once

#include <cstddef>
#include <functional>

namespace robustrl {

// Effective worker count: the request (0 means "one"), capped by the
// ROBUSTRL_THREADS environment variable when it is set to a positive integer.
int resolve_workers(int requested);

// Runs fn(i) for i in [0, n). Work is split into contiguous index blocks, one
// per worker. fn must only write to state owned by index i; under that
// contract the result is identical for every worker count, which is what the
// reproducibility guarantees lean on. Exceptions from workers are rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace robustrl
