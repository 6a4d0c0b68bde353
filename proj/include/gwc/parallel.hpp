#pragma once

namespace gwc {

// Process-wide worker count used by all OpenMP regions in the library.
// Default is the hardware thread count. Every parallel loop writes results
// into pre-assigned slots and derives any randomness from per-slot seeds, so
// output is identical for any worker count.
int max_workers();
void set_max_workers(int n);

} // namespace gwc
