#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace taac::io {

// Clip files are raw little-endian 32-bit floats, no header.
void write_f32(const std::string& path, const std::vector<float>& x);
std::vector<float> read_f32(const std::string& path);

struct Wav {
    std::vector<float> samples;  // mono, [-1, 1]
    std::uint32_t sample_rate = 8000;
};

// PCM16 mono only. Anything else is an IoError naming the offending field.
Wav read_wav(const std::string& path);
void write_wav(const std::string& path, const Wav& w);

struct Annotation {
    double t0 = 0;
    double t1 = 0;
    std::string tag;
};

// CSV rows "t0,t1,tag". A header row is allowed when its first field is not
// numeric. Malformed rows raise ParseError with the line number.
std::vector<Annotation> read_annotations_csv(const std::string& path);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& content);

}  // namespace taac::io
