#pragma once

#include <cstddef>
#include <functional>

namespace verifem {

// Worker count from VERIFEM_THREADS; defaults to hardware concurrency.
int worker_count();

// Calls body(i) for i in [0, n). Each index runs exactly once; callers write
// into preallocated slots so results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace verifem
