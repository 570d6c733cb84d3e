#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace taac {

enum class Backend { Serial, OpenMp };

// Process-wide kernel backend. Defaults to OpenMp when compiled with OpenMP;
// the TAAC_BACKEND environment variable ("serial" / "openmp") overrides at
// first use.
Backend backend();
void set_backend(Backend b);

// Parallel loop over [0, n). Each index is handled by exactly one invocation
// of body, so any per-index accumulation order is fixed regardless of thread
// count. Results are bit-identical between backends by construction.
template <class F>
inline void par_for(std::size_t n, F&& body) {
#ifdef _OPENMP
    if (backend() == Backend::OpenMp && n > 1) {
        #pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            body(static_cast<std::size_t>(i));
        }
        return;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace taac
