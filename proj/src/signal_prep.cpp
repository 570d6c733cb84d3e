#include "taac/signal_prep.hpp"

#include <cmath>

#include "taac/errors.hpp"

namespace taac::prep {

std::vector<float> peak_normalize(const std::vector<float>& x) {
    if (x.empty()) throw NumericError("peak_normalize: empty signal");
    float peak = 0.0f;
    for (float v : x) peak = std::max(peak, std::fabs(v));
    if (peak == 0.0f) throw NumericError("peak_normalize: all-zero signal has no peak");
    std::vector<float> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] / peak;
    return out;
}

std::vector<Segment> extract_segments(const RawRecording& rec, const std::string& keep_tag) {
    std::vector<Segment> out;
    const auto len = static_cast<long long>(rec.samples.size());
    for (const auto& a : rec.annotations) {
        if (a.tag != keep_tag) continue;
        auto lo = static_cast<long long>(std::llround(a.t0 * rec.sample_rate));
        auto hi = static_cast<long long>(std::llround(a.t1 * rec.sample_rate));
        lo = std::max(0LL, lo);
        hi = std::min(len, hi);
        if (hi <= lo) continue;
        Segment s;
        s.samples.assign(rec.samples.begin() + lo, rec.samples.begin() + hi);
        s.tag = keep_tag;
        s.duration = double(hi - lo) / rec.sample_rate;
        out.push_back(std::move(s));
    }
    if (out.empty()) throw NumericError("extract_segments: no segments tagged '" + keep_tag + "'");
    return out;
}

std::vector<std::vector<float>> recombine(const std::vector<Segment>& segments, double target_s,
                                          double sample_rate) {
    if (target_s <= 0) throw ConfigError("recombine: target duration must be positive");
    for (const auto& s : segments) {
        if (s.tag != segments.front().tag) {
            throw ConfigError("recombine: segments mix tags '" + segments.front().tag + "' and '" +
                              s.tag + "'");
        }
    }
    std::vector<std::vector<float>> clips;
    std::vector<float> acc;
    double acc_s = 0;
    for (const auto& s : segments) {
        acc.insert(acc.end(), s.samples.begin(), s.samples.end());
        acc_s += s.duration;
        if (acc_s >= target_s) {
            clips.push_back(std::move(acc));
            acc.clear();
            acc_s = 0;
        }
    }
    (void)sample_rate;  // durations are carried on the segments
    return clips;        // trailing remainder < target dropped with acc
}

std::vector<float> resample_to(const std::vector<float>& x, std::size_t L) {
    if (x.size() < 2) throw NumericError("resample_to: need at least 2 input samples");
    if (L < 2) throw ConfigError("resample_to: need at least 2 output samples");
    std::vector<float> out(L);
    const double scale = double(x.size() - 1) / double(L - 1);
    for (std::size_t j = 0; j < L; ++j) {
        const double p = double(j) * scale;
        const auto i0 = static_cast<std::size_t>(p);
        if (i0 + 1 >= x.size()) {
            out[j] = x.back();
            continue;
        }
        const double frac = p - double(i0);
        // a + f*(b-a): exact on constants, never leaves [min, max]
        out[j] = static_cast<float>(double(x[i0]) + frac * (double(x[i0 + 1]) - double(x[i0])));
    }
    out[0] = x.front();
    out[L - 1] = x.back();
    return out;
}

}  // namespace taac::prep
