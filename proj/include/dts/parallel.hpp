#pragma once

namespace dts {

// Caps the number of OpenMP threads used by the parallel kernels.
// n <= 0 restores the library default. Parallel kernels partition output
// elements disjointly, so results are bit-identical for any cap.
void set_max_threads(int n);

// Threads the parallel kernels may currently use (1 when built without
// OpenMP).
int max_threads();

}  // namespace dts
