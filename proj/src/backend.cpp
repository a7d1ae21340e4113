#include "concord/backend.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace concord {

namespace {
#ifdef _OPENMP
Backend g_default = Backend::parallel;
#else
Backend g_default = Backend::serial;
#endif
}  // namespace

Backend default_backend() { return g_default; }

void set_default_backend(Backend b) { g_default = b; }

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace concord
