#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace taac::crypt {

// A key is a sequence of non-negative integer digits.  Everything the cipher
// does is a deterministic function of the key hash and the strength T.
using Key = std::vector<std::uint32_t>;

// Weighted digit sum: hash = sum_j digits[j] * j with 1-based positions,
// computed exactly in 64-bit integer arithmetic.
std::uint64_t key_hash(const Key& key);

// Short identifier safe to log or store next to ciphertext (low 32 bits of
// the key hash).  Never write the key itself into metadata.
std::uint32_t key_fingerprint(const Key& key);

// Deterministically generate a key of `digits` digits, each in [0, 2^31).
Key keygen(std::uint64_t seed, std::size_t digits = 32);

// One line of comma-separated digits.
void save_key(const std::string& path, const Key& key);
Key load_key(const std::string& path);

// Key-dependent modulation pattern, one value per sample:
//   theta_i = fmod(hash * (i+1)(i+2)/2, 2*pi)
//   phi_i   = sin(theta_i) * cos(theta_i)
// The quadratic index term sweeps the phase across the band so the pattern
// does not collapse to a single tone.
std::vector<double> base_noise(std::uint64_t hash, std::size_t len);

// Total injected amplitude after T diffusion steps.  The stepwise schedule
// adds (1 - t/T) of the pattern at step t = 1..T-1, which telescopes to
// (T-1)/2; the closed form is what encrypt/decrypt use.
double schedule_sum(std::size_t strength);
// Literal left-to-right accumulation of the schedule, kept as a reference
// for the closed form (agrees to ~1e-9 over practical T).
double schedule_sum_loop(std::size_t strength);

// x~ = x + A(T) * phi.  strength == 1 gives A == 0 and returns the input
// unchanged (bit-exact).  strength == 0 is rejected.
std::vector<double> encrypt(const std::vector<double>& x, const Key& key, std::size_t strength);
std::vector<double> decrypt(const std::vector<double>& x_tilde, const Key& key,
                            std::size_t strength);

// Step-by-step reference: applies the T-1 partial additions one at a time.
std::vector<double> encrypt_loop(const std::vector<double>& x, const Key& key,
                                 std::size_t strength);

// Convenience wrappers for float pipelines; the math runs in double per
// element and rounds once at the end.
std::vector<float> encrypt_f32(const std::vector<float>& x, const Key& key, std::size_t strength);
std::vector<float> decrypt_f32(const std::vector<float>& x_tilde, const Key& key,
                               std::size_t strength);

// Chaotic-masking baseline: logistic map l <- r*l*(1-l), first 100 iterates
// discarded, additive mask c_i = x_i + 10*(l_i - 0.5).  seed must lie
// strictly inside (0, 1).
std::vector<double> chaos_keystream(double seed, double r, std::size_t len);
std::vector<float> chaos_encrypt(const std::vector<float>& x, double seed, double r);
std::vector<float> chaos_decrypt(const std::vector<float>& c, double seed, double r);

}  // namespace taac::crypt
