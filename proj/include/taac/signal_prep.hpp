#pragma once

#include <string>
#include <vector>

#include "taac/io.hpp"

namespace taac::prep {

struct RawRecording {
    std::vector<float> samples;
    double sample_rate = 8000.0;
    std::vector<io::Annotation> annotations;  // (t0 s, t1 s, speaker tag)
};

struct Segment {
    std::vector<float> samples;
    std::string tag;
    double duration = 0;  // seconds
};

// x / max(|x|). Output peak is exactly 1 in magnitude. Empty or all-zero
// input is a degenerate-input error.
std::vector<float> peak_normalize(const std::vector<float>& x);

// Cut the annotated regions carrying keep_tag, in annotation order.
// No matching region is an empty-result error naming the tag.
std::vector<Segment> extract_segments(const RawRecording& rec, const std::string& keep_tag);

// Greedy in-order concatenation: emit a clip the first time accumulated
// duration reaches target, drop a trailing remainder shorter than target.
std::vector<std::vector<float>> recombine(const std::vector<Segment>& segments, double target_s,
                                          double sample_rate);

// Linear interpolation onto exactly L samples, endpoints preserved.
std::vector<float> resample_to(const std::vector<float>& x, std::size_t L);

}  // namespace taac::prep
