#include "taac/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "taac/errors.hpp"

// On-disk formats are little-endian; this code assumes a little-endian host.
static_assert(std::endian::native == std::endian::little, "little-endian host required");

namespace taac::io {

namespace {

std::ifstream open_in(const std::string& path, bool binary) {
    std::ifstream f(path, binary ? std::ios::binary : std::ios::in);
    if (!f) throw IoError("cannot open " + path);
    return f;
}

std::ofstream open_out(const std::string& path, bool binary) {
    std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
    if (!f) throw IoError("cannot write " + path);
    return f;
}

template <class T>
void put(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& f, const std::string& path) {
    T v;
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw IoError("truncated file " + path);
    return v;
}

}  // namespace

void write_f32(const std::string& path, const std::vector<float>& x) {
    auto f = open_out(path, true);
    f.write(reinterpret_cast<const char*>(x.data()),
            static_cast<std::streamsize>(x.size() * sizeof(float)));
    if (!f) throw IoError("short write to " + path);
}

std::vector<float> read_f32(const std::string& path) {
    auto f = open_in(path, true);
    f.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(f.tellg());
    f.seekg(0);
    if (bytes % sizeof(float)) throw IoError(path + ": size not a multiple of 4 bytes");
    std::vector<float> x(bytes / sizeof(float));
    f.read(reinterpret_cast<char*>(x.data()), static_cast<std::streamsize>(bytes));
    if (!f) throw IoError("truncated file " + path);
    return x;
}

Wav read_wav(const std::string& path) {
    auto f = open_in(path, true);
    char tag[4];
    f.read(tag, 4);
    if (!f || std::memcmp(tag, "RIFF", 4)) throw IoError(path + ": missing RIFF header");
    get<std::uint32_t>(f, path);  // riff size, unchecked
    f.read(tag, 4);
    if (!f || std::memcmp(tag, "WAVE", 4)) throw IoError(path + ": not a WAVE file");

    Wav out;
    bool have_fmt = false;
    std::uint16_t channels = 0, bits = 0;
    while (f.read(tag, 4)) {
        const auto chunk = get<std::uint32_t>(f, path);
        if (!std::memcmp(tag, "fmt ", 4)) {
            const auto fmt_code = get<std::uint16_t>(f, path);
            channels = get<std::uint16_t>(f, path);
            out.sample_rate = get<std::uint32_t>(f, path);
            get<std::uint32_t>(f, path);  // byte rate
            get<std::uint16_t>(f, path);  // block align
            bits = get<std::uint16_t>(f, path);
            if (fmt_code != 1) throw IoError(path + ": only PCM supported");
            if (channels != 1) throw IoError(path + ": only mono supported");
            if (bits != 16) throw IoError(path + ": only 16-bit supported");
            if (chunk > 16) f.seekg(chunk - 16, std::ios::cur);
            have_fmt = true;
        } else if (!std::memcmp(tag, "data", 4)) {
            if (!have_fmt) throw IoError(path + ": data chunk before fmt");
            const std::size_t n = chunk / 2;
            out.samples.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                const auto s = get<std::int16_t>(f, path);
                out.samples[i] = static_cast<float>(s) / 32768.0f;
            }
            return out;
        } else {
            f.seekg(chunk + (chunk & 1), std::ios::cur);
        }
    }
    throw IoError(path + ": no data chunk");
}

void write_wav(const std::string& path, const Wav& w) {
    auto f = open_out(path, true);
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
    f.write("RIFF", 4);
    put<std::uint32_t>(f, 36 + data_bytes);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    put<std::uint32_t>(f, 16);
    put<std::uint16_t>(f, 1);  // PCM
    put<std::uint16_t>(f, 1);  // mono
    put<std::uint32_t>(f, w.sample_rate);
    put<std::uint32_t>(f, w.sample_rate * 2);
    put<std::uint16_t>(f, 2);
    put<std::uint16_t>(f, 16);
    f.write("data", 4);
    put<std::uint32_t>(f, data_bytes);
    for (float s : w.samples) {
        float c = s;
        if (c > 1.0f) c = 1.0f;
        if (c < -1.0f) c = -1.0f;
        // quantize at the same scale read_wav divides by, so a round trip
        // stays within half a PCM step (full scale clips to 32767)
        const long q = std::lround(double(c) * 32768.0);
        put<std::int16_t>(f, static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L)));
    }
}

std::vector<Annotation> read_annotations_csv(const std::string& path) {
    auto f = open_in(path, false);
    std::vector<Annotation> out;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string a, b, c;
        if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c)) {
            throw ParseError(path + ": expected t0,t1,tag", line_no);
        }
        Annotation ann;
        try {
            std::size_t pos = 0;
            ann.t0 = std::stod(a, &pos);
            if (pos != a.size()) throw std::invalid_argument(a);
            ann.t1 = std::stod(b, &pos);
            if (pos != b.size()) throw std::invalid_argument(b);
        } catch (const std::exception&) {
            if (line_no == 1) continue;  // header row
            throw ParseError(path + ": non-numeric time field", line_no);
        }
        if (ann.t1 <= ann.t0) throw ParseError(path + ": t1 must exceed t0", line_no);
        ann.tag = c;
        out.push_back(std::move(ann));
    }
    return out;
}

std::string read_text(const std::string& path) {
    auto f = open_in(path, false);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& content) {
    auto f = open_out(path, false);
    f << content;
    if (!f) throw IoError("short write to " + path);
}

}  // namespace taac::io
