#include "s2v/parallel.hpp"

#include <omp.h>

namespace s2v::par {

namespace {
int g_max_jobs = 0;
}

void set_max_jobs(int jobs) { g_max_jobs = jobs < 0 ? 0 : jobs; }

int max_jobs() { return g_max_jobs; }

int threads() {
    int hw = omp_get_max_threads();
    if (g_max_jobs == 0) return hw;
    return g_max_jobs < hw ? g_max_jobs : hw;
}

}  // namespace s2v::par
