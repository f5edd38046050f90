#pragma once

#include <functional>

namespace revolver {

// Worker cap: REVOLVER_THREADS if set, otherwise the machine's core count.
int worker_count();

// Runs fn(i) for every i in [0, n). Each index must write only its own
// pre-allocated slot so results are independent of scheduling order.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace revolver
