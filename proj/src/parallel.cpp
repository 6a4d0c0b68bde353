#include "gwc/parallel.hpp"

#include <atomic>

#include <omp.h>

namespace gwc {

namespace {
std::atomic<int> g_max_workers{0}; // 0 = not set yet
}

int max_workers() {
    int n = g_max_workers.load(std::memory_order_relaxed);
    if (n <= 0) return omp_get_max_threads();
    return n;
}

void set_max_workers(int n) {
    g_max_workers.store(n < 1 ? 1 : n, std::memory_order_relaxed);
}

} // namespace gwc
