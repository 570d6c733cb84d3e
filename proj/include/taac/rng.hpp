#pragma once

#include <cstdint>
#include <vector>

namespace taac {

// splitmix64 step. Fast, well-mixed, and trivially reproducible across
// platforms, which std::mt19937_64 distributions are not (their mapping to
// doubles is implementation-defined).
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Order-free hash of a key tuple. Used for counter-based draws (dropout
// masks keyed by sample and element) where the value must not depend on
// evaluation order or batch composition.
inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    return splitmix64(s);
}

inline double u64_to_unit(std::uint64_t v) {
    // 53 mantissa bits -> [0, 1)
    return static_cast<double>(v >> 11) * 0x1.0p-53;
}

// Uniform [0,1) from an arbitrary key tuple, stateless.
inline double unit_hash(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
    return u64_to_unit(hash_combine(hash_combine(a, b), hash_combine(c, d)));
}

// Sequential seeded stream.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed ^ 0xdeadbeefcafef00dULL) {
        // decorrelate trivially related seeds
        splitmix64(state_);
        splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    double uniform() { return u64_to_unit(next_u64()); }  // [0, 1)

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n)
    std::uint64_t randint(std::uint64_t n) { return next_u64() % n; }

    double normal();  // Box-Muller, one cached value

    std::vector<std::uint32_t> key_digits(std::size_t m);  // digits < 2^31

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(randint(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::uint64_t state_;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

// Derive an independent stream from a parent seed and a tag.
inline Rng sub_rng(std::uint64_t seed, std::uint64_t tag) {
    return Rng(hash_combine(seed, tag));
}

}  // namespace taac
