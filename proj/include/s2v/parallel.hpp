#pragma once

namespace s2v::par {

// Global worker cap for the OpenMP kernels. 0 means "all hardware threads".
// Set once from the CLI --jobs flag; kernels read it through threads().
void set_max_jobs(int jobs);
int max_jobs();

// Effective thread count for a parallel region.
int threads();

}  // namespace s2v::par
