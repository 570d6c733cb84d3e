#include "taac/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "taac/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian-only");

namespace taac::ckpt {

namespace {

constexpr char kMagic[4] = {'T', 'A', 'A', 'C'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;

template <class T>
void put(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& f, const std::string& path) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw IoError("checkpoint '" + path + "': truncated file");
    return v;
}

}  // namespace

void save(const std::string& path, const NamedViews& entries) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("checkpoint: cannot open '" + path + "' for writing");
    f.write(kMagic, 4);
    put(f, kVersion);
    put(f, static_cast<std::uint32_t>(entries.size()));
    for (const auto& [name, tensor] : entries) {
        put(f, static_cast<std::uint32_t>(name.size()));
        f.write(name.data(), static_cast<std::streamsize>(name.size()));
        put(f, kDtypeF32);
        put(f, static_cast<std::uint32_t>(tensor->shape.size()));
        for (auto d : tensor->shape) put(f, static_cast<std::uint64_t>(d));
        f.write(reinterpret_cast<const char*>(tensor->data.data()),
                static_cast<std::streamsize>(tensor->data.size() * sizeof(float)));
    }
    if (!f) throw IoError("checkpoint: write to '" + path + "' failed");
}

std::map<std::string, TensorF> load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("checkpoint: cannot open '" + path + "'");
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError("checkpoint '" + path + "': bad magic bytes");
    }
    const auto version = get<std::uint32_t>(f, path);
    if (version != kVersion) {
        throw IoError("checkpoint '" + path + "': unsupported format version " +
                      std::to_string(version));
    }
    const auto count = get<std::uint32_t>(f, path);
    std::map<std::string, TensorF> out;
    for (std::uint32_t e = 0; e < count; ++e) {
        const auto name_len = get<std::uint32_t>(f, path);
        std::string name(name_len, '\0');
        f.read(name.data(), name_len);
        if (!f) throw IoError("checkpoint '" + path + "': truncated file");
        const auto dtype = get<std::uint8_t>(f, path);
        if (dtype != kDtypeF32) {
            throw IoError("checkpoint '" + path + "': entry '" + name + "' has unknown dtype " +
                          std::to_string(int(dtype)));
        }
        const auto ndim = get<std::uint32_t>(f, path);
        std::vector<std::size_t> shape(ndim);
        for (auto& d : shape) d = static_cast<std::size_t>(get<std::uint64_t>(f, path));
        TensorF t(shape);
        f.read(reinterpret_cast<char*>(t.data.data()),
               static_cast<std::streamsize>(t.data.size() * sizeof(float)));
        if (!f) throw IoError("checkpoint '" + path + "': truncated payload for '" + name + "'");
        out.emplace(name, std::move(t));
    }
    return out;
}

void load_into(const std::string& path, const NamedSlots& slots) {
    auto loaded = load(path);
    for (auto& [name, dst] : slots) {
        auto it = loaded.find(name);
        if (it == loaded.end()) {
            throw IoError("checkpoint '" + path + "': missing entry '" + name + "'");
        }
        if (it->second.shape != dst->shape) {
            throw DimensionError("checkpoint '" + path + "': entry '" + name + "' has shape " +
                                 it->second.shape_str() + ", model expects " + dst->shape_str());
        }
        dst->data = std::move(it->second.data);
    }
}

}  // namespace taac::ckpt
