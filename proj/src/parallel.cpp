#include "taac/parallel.hpp"

#include <cstdlib>
#include <cstring>

namespace taac {

namespace {

Backend initial_backend() {
#ifdef _OPENMP
    const char* env = std::getenv("TAAC_BACKEND");
    if (env && std::strcmp(env, "serial") == 0) return Backend::Serial;
    return Backend::OpenMp;
#else
    return Backend::Serial;
#endif
}

Backend g_backend = initial_backend();

}  // namespace

Backend backend() { return g_backend; }

void set_backend(Backend b) { g_backend = b; }

}  // namespace taac
