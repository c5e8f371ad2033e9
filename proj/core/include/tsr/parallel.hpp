#pragma once

#include <functional>

namespace tsr {

// Worker count for parallel sections. Reads TSR_THREADS on every call so
// tests can change it; 0 or unset means hardware concurrency.
int threadBudget();

// Runs fn(i) for i in [0, count). Tasks must write to disjoint outputs;
// the partition carries no floating-point reductions, so results are
// bit-identical for any thread count. Nested calls run inline.
void parallelFor(int count, const std::function<void(int)>& fn);

}  // namespace tsr
