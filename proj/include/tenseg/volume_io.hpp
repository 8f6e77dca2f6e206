#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tenseg/common.hpp"
#include "tenseg/image.hpp"

namespace tenseg {

// Minimal raw volume container: magic "STV1", u32 little-endian dims
// D,H,W,C, then D*H*W*C little-endian f32 samples in [z][y][x][c] order.
inline constexpr char kVolumeMagic[4] = {'S', 'T', 'V', '1'};

inline Image load_volume(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kVolumeMagic, 4) != 0) {
        throw ParseError("not an STV1 volume (bad magic)", 0);
    }
    std::uint32_t dims[4];
    if (!in.read(reinterpret_cast<char*>(dims), sizeof(dims))) {
        throw ParseError("truncated STV1 header", 4);
    }
    const std::int64_t d = dims[0], h = dims[1], w = dims[2], c = dims[3];
    if (d < 1 || h < 1 || w < 1 || c < 1) {
        throw ParseError("STV1 dims must be >= 1", 4);
    }
    const std::int64_t n = d * h * w * c;
    std::vector<float> payload(static_cast<std::size_t>(n));
    if (!in.read(reinterpret_cast<char*>(payload.data()),
                 static_cast<std::streamsize>(sizeof(float) * payload.size()))) {
        throw ParseError("STV1 payload shorter than D*H*W*C = " + std::to_string(n) + " samples",
                         20);
    }
    Image img(h, w, d, c);
    img.source_bit_depth = 32;
    for (std::size_t i = 0; i < payload.size(); ++i) img.data[i] = payload[i];
    return img;
}

inline void save_volume(const std::filesystem::path& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(kVolumeMagic, 4);
    const std::uint32_t dims[4] = {static_cast<std::uint32_t>(img.depth),
                                   static_cast<std::uint32_t>(img.height),
                                   static_cast<std::uint32_t>(img.width),
                                   static_cast<std::uint32_t>(img.channels)};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    std::vector<float> payload(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i) payload[i] = static_cast<float>(img.data[i]);
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(sizeof(float) * payload.size()));
    if (!out) throw IoError("short write to " + path.string());
}

}  // namespace tenseg
