#pragma once

#include <functional>

#include "fqr/types.hpp"

namespace fqr {

/// Runs fn(0..count-1) on up to `workers` threads. Work items must write only
/// to their own slots; aggregation stays with the caller so results do not
/// depend on the worker count.
void parallel_for(Index count, int workers, const std::function<void(Index)>& fn);

/// FQR_WORKERS env var if set, otherwise hardware concurrency.
int default_workers();

}  // namespace fqr
