#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tenseg/common.hpp"
#include "tenseg/image.hpp"

namespace tenseg {

namespace detail {

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

// Skips PNM whitespace and '#' comments; `pos` tracks the byte offset for
// error reporting.
inline void skip_pnm_space(const std::string& s, std::size_t& pos) {
    while (pos < s.size()) {
        const char c = s[pos];
        if (c == '#') {
            while (pos < s.size() && s[pos] != '\n') ++pos;
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f') {
            ++pos;
        } else {
            break;
        }
    }
}

inline std::int64_t parse_pnm_int(const std::string& s, std::size_t& pos, const char* what) {
    skip_pnm_space(s, pos);
    if (pos >= s.size() || s[pos] < '0' || s[pos] > '9') {
        throw ParseError(std::string("expected ") + what + " in PNM header", pos);
    }
    std::int64_t v = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
        v = v * 10 + (s[pos] - '0');
        ++pos;
    }
    return v;
}

}  // namespace detail

// Binary PGM (P5) or PPM (P6), maxval 255 or 65535. Values come back
// divided by maxval; 16-bit samples are big-endian per the Netpbm spec.
inline Image load_pnm(const std::filesystem::path& path) {
    const std::string s = detail::read_file_bytes(path);
    std::size_t pos = 0;
    if (s.size() < 2 || s[0] != 'P' || (s[1] != '5' && s[1] != '6')) {
        throw ParseError("not a binary PGM/PPM file (expected P5 or P6 magic)", 0);
    }
    const std::int64_t channels = s[1] == '5' ? 1 : 3;
    pos = 2;
    const std::int64_t width = detail::parse_pnm_int(s, pos, "width");
    const std::int64_t height = detail::parse_pnm_int(s, pos, "height");
    const std::int64_t maxval = detail::parse_pnm_int(s, pos, "maxval");
    if (width < 1 || height < 1) {
        throw ParseError("PNM dims must be >= 1", pos);
    }
    if (maxval != 255 && maxval != 65535) {
        throw ParseError("unsupported PNM maxval " + std::to_string(maxval), pos);
    }
    if (pos >= s.size()) throw ParseError("missing PNM payload", pos);
    ++pos;  // single whitespace byte after maxval

    const std::int64_t bytes_per_sample = maxval > 255 ? 2 : 1;
    const std::int64_t n_samples = width * height * channels;
    if (static_cast<std::int64_t>(s.size()) - static_cast<std::int64_t>(pos) <
        n_samples * bytes_per_sample) {
        throw ParseError("truncated PNM payload: need " +
                             std::to_string(n_samples * bytes_per_sample) + " bytes, have " +
                             std::to_string(s.size() - pos),
                         pos);
    }
    Image img = Image::plane(height, width, channels);
    img.source_bit_depth = maxval > 255 ? 16 : 8;
    const double denom = static_cast<double>(maxval);
    const auto* bytes = reinterpret_cast<const unsigned char*>(s.data() + pos);
    for (std::int64_t i = 0; i < n_samples; ++i) {
        std::int64_t v;
        if (bytes_per_sample == 1) {
            v = bytes[i];
        } else {
            v = (static_cast<std::int64_t>(bytes[2 * i]) << 8) | bytes[2 * i + 1];
        }
        img.data[static_cast<std::size_t>(i)] = static_cast<double>(v) / denom;
    }
    return img;
}

// Writes P5 (C==1) or P6 (C==3); values are rounded to maxval steps.
inline void save_pnm(const std::filesystem::path& path, const Image& img, int maxval = 255) {
    if (img.depth != 1) throw DimensionError("save_pnm expects a 2D image");
    if (img.channels != 1 && img.channels != 3) {
        throw DimensionError("save_pnm supports 1 or 3 channels, got " +
                             std::to_string(img.channels));
    }
    if (maxval != 255 && maxval != 65535) {
        throw ConfigError("save_pnm maxval must be 255 or 65535");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << (img.channels == 1 ? "P5" : "P6") << "\n"
        << img.width << " " << img.height << "\n"
        << maxval << "\n";
    for (double v : img.data) {
        const double clamped = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        const auto q = static_cast<std::uint32_t>(std::lround(clamped * maxval));
        if (maxval > 255) {
            out.put(static_cast<char>((q >> 8) & 0xff));
            out.put(static_cast<char>(q & 0xff));
        } else {
            out.put(static_cast<char>(q & 0xff));
        }
    }
    if (!out) throw IoError("short write to " + path.string());
}

}  // namespace tenseg
