#include "taac/rng.hpp"

#include <cmath>

namespace taac {

double Rng::normal() {
    if (have_cached_) {
        have_cached_ = false;
        return cached_;
    }
    // Box-Muller. u1 is kept away from 0 so the log stays finite.
    double u1 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
}

std::vector<std::uint32_t> Rng::key_digits(std::size_t m) {
    std::vector<std::uint32_t> k(m);
    for (auto& d : k) d = static_cast<std::uint32_t>(next_u64() & 0x7fffffffULL);
    return k;
}

}  // namespace taac
