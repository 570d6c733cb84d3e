#include "taac/encryptor.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "taac/errors.hpp"
#include "taac/rng.hpp"

namespace taac::crypt {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kChaosGain = 10.0;
constexpr std::size_t kChaosDiscard = 100;
}  // namespace

std::uint64_t key_hash(const Key& key) {
    if (key.empty()) throw ConfigError("key_hash: key has no digits");
    std::uint64_t h = 0;
    for (std::size_t j = 0; j < key.size(); ++j) {
        h += static_cast<std::uint64_t>(key[j]) * static_cast<std::uint64_t>(j + 1);
    }
    return h;
}

std::uint32_t key_fingerprint(const Key& key) {
    return static_cast<std::uint32_t>(key_hash(key) & 0xffffffffULL);
}

Key keygen(std::uint64_t seed, std::size_t digits) {
    if (digits == 0) throw ConfigError("keygen: need at least one digit");
    Rng rng(hash_combine(seed, 0x4b3959ULL));
    return rng.key_digits(digits);
}

void save_key(const std::string& path, const Key& key) {
    if (key.empty()) throw ConfigError("save_key: key has no digits");
    std::ofstream f(path);
    if (!f) throw IoError("save_key: cannot open '" + path + "' for writing");
    for (std::size_t j = 0; j < key.size(); ++j) {
        if (j) f << ',';
        f << key[j];
    }
    f << '\n';
    if (!f) throw IoError("save_key: write to '" + path + "' failed");
}

Key load_key(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("load_key: cannot open '" + path + "'");
    std::string line;
    std::getline(f, line);
    Key key;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        // trim surrounding whitespace
        const auto b = tok.find_first_not_of(" \t\r");
        const auto e = tok.find_last_not_of(" \t\r");
        if (b == std::string::npos) throw ParseError("load_key: empty digit in '" + path + "'");
        tok = tok.substr(b, e - b + 1);
        std::size_t pos = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(tok, &pos);
        } catch (const std::exception&) {
            throw ParseError("load_key: '" + tok + "' is not a key digit");
        }
        if (pos != tok.size() || tok[0] == '-') {
            throw ParseError("load_key: '" + tok + "' is not a key digit");
        }
        if (v > 0xffffffffULL) {
            throw ParseError("load_key: digit '" + tok + "' exceeds 32 bits");
        }
        key.push_back(static_cast<std::uint32_t>(v));
    }
    if (key.empty()) throw ParseError("load_key: no digits found in '" + path + "'");
    return key;
}

std::vector<double> base_noise(std::uint64_t hash, std::size_t len) {
    std::vector<double> phi(len);
    const double h = static_cast<double>(hash);
    for (std::size_t i = 0; i < len; ++i) {
        const std::uint64_t tri = (static_cast<std::uint64_t>(i) + 1) *
                                  (static_cast<std::uint64_t>(i) + 2) / 2;
        const double theta = std::fmod(h * static_cast<double>(tri), kTwoPi);
        phi[i] = std::sin(theta) * std::cos(theta);
    }
    return phi;
}

double schedule_sum(std::size_t strength) {
    if (strength == 0) throw ConfigError("schedule_sum: strength must be >= 1");
    return (static_cast<double>(strength) - 1.0) / 2.0;
}

double schedule_sum_loop(std::size_t strength) {
    if (strength == 0) throw ConfigError("schedule_sum_loop: strength must be >= 1");
    double a = 0.0;
    const double t_total = static_cast<double>(strength);
    for (std::size_t t = 1; t <= strength; ++t) {
        a += 1.0 - static_cast<double>(t) / t_total;
    }
    return a;
}

namespace {

std::vector<double> apply_noise(const std::vector<double>& x, const Key& key,
                                std::size_t strength, double sign) {
    const double a = schedule_sum(strength);
    if (a == 0.0) return x;  // strength 1: identity, bit-exact
    const auto phi = base_noise(key_hash(key), x.size());
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + sign * a * phi[i];
    return out;
}

}  // namespace

std::vector<double> encrypt(const std::vector<double>& x, const Key& key, std::size_t strength) {
    return apply_noise(x, key, strength, +1.0);
}

std::vector<double> decrypt(const std::vector<double>& x_tilde, const Key& key,
                            std::size_t strength) {
    return apply_noise(x_tilde, key, strength, -1.0);
}

std::vector<double> encrypt_loop(const std::vector<double>& x, const Key& key,
                                 std::size_t strength) {
    if (strength == 0) throw ConfigError("encrypt_loop: strength must be >= 1");
    const auto phi = base_noise(key_hash(key), x.size());
    std::vector<double> out = x;
    const double t_total = static_cast<double>(strength);
    for (std::size_t t = 1; t <= strength; ++t) {
        const double w = 1.0 - static_cast<double>(t) / t_total;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * phi[i];
    }
    return out;
}

namespace {

std::vector<float> apply_noise_f32(const std::vector<float>& x, const Key& key,
                                   std::size_t strength, double sign) {
    const double a = schedule_sum(strength);
    if (a == 0.0) return x;
    const auto phi = base_noise(key_hash(key), x.size());
    std::vector<float> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = static_cast<float>(static_cast<double>(x[i]) + sign * a * phi[i]);
    }
    return out;
}

}  // namespace

std::vector<float> encrypt_f32(const std::vector<float>& x, const Key& key, std::size_t strength) {
    return apply_noise_f32(x, key, strength, +1.0);
}

std::vector<float> decrypt_f32(const std::vector<float>& x_tilde, const Key& key,
                               std::size_t strength) {
    return apply_noise_f32(x_tilde, key, strength, -1.0);
}

std::vector<double> chaos_keystream(double seed, double r, std::size_t len) {
    if (!(seed > 0.0 && seed < 1.0)) {
        throw ConfigError("chaos_keystream: seed must lie strictly in (0, 1)");
    }
    if (!(r > 3.57 && r < 4.0)) {
        throw ConfigError("chaos_keystream: map parameter must lie in (3.57, 4) (chaotic regime)");
    }
    double l = seed;
    for (std::size_t i = 0; i < kChaosDiscard; ++i) l = r * l * (1.0 - l);
    std::vector<double> ks(len);
    for (std::size_t i = 0; i < len; ++i) {
        l = r * l * (1.0 - l);
        ks[i] = l;
    }
    return ks;
}

std::vector<float> chaos_encrypt(const std::vector<float>& x, double seed, double r) {
    const auto ks = chaos_keystream(seed, r, x.size());
    std::vector<float> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = static_cast<float>(static_cast<double>(x[i]) + kChaosGain * (ks[i] - 0.5));
    }
    return out;
}

std::vector<float> chaos_decrypt(const std::vector<float>& c, double seed, double r) {
    const auto ks = chaos_keystream(seed, r, c.size());
    std::vector<float> out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        out[i] = static_cast<float>(static_cast<double>(c[i]) - kChaosGain * (ks[i] - 0.5));
    }
    return out;
}

}  // namespace taac::crypt
