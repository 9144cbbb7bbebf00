#pragma once

namespace occkit {

// Number of OpenMP workers the kernels use. Defaults to the OpenMP runtime
// maximum, capped by the OCCKIT_THREADS environment variable when set.
int worker_count();

// Overrides the worker count for the current process (0 restores the default).
void set_worker_count(int n);

}  // namespace occkit
