#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "tenseg/common.hpp"

namespace tenseg {

// Dense H x W (x D) x C intensity array, stored [z][y][x][c] row-major.
// D == 1 for 2D images. Values live in [0,1] after normalization.
struct Image {
    std::int64_t height = 0;
    std::int64_t width = 0;
    std::int64_t depth = 1;
    std::int64_t channels = 1;
    std::vector<double> data;
    int source_bit_depth = 8;

    Image() = default;

    Image(std::int64_t h, std::int64_t w, std::int64_t d, std::int64_t c)
        : height(h), width(w), depth(d), channels(c),
          data(static_cast<std::size_t>(h * w * d * c), 0.0) {
        if (h < 1 || w < 1 || d < 1 || c < 1) {
            throw DimensionError("image dims must be >= 1");
        }
    }

    static Image plane(std::int64_t h, std::int64_t w, std::int64_t c = 1) {
        return Image(h, w, 1, c);
    }

    bool is_3d() const { return depth > 1; }
    std::int64_t pixel_count() const { return height * width * depth; }
    std::int64_t value_count() const { return pixel_count() * channels; }

    std::size_t offset(std::int64_t z, std::int64_t y, std::int64_t x, std::int64_t c = 0) const {
        return static_cast<std::size_t>(((z * height + y) * width + x) * channels + c);
    }

    double& at(std::int64_t z, std::int64_t y, std::int64_t x, std::int64_t c = 0) {
        return data[offset(z, y, x, c)];
    }
    double at(std::int64_t z, std::int64_t y, std::int64_t x, std::int64_t c = 0) const {
        return data[offset(z, y, x, c)];
    }

    bool same_spatial_dims(const Image& o) const {
        return height == o.height && width == o.width && depth == o.depth;
    }
};

// A segmentation mask is an image with one channel and values in {0,1}.
using Mask = Image;

struct Sample {
    Image image;
    Mask mask;
    std::string id;
};

// Per-image min-max normalization to [0,1]; constant images map to zeros.
inline void normalize_minmax(Image& img) {
    if (img.data.empty()) return;
    const auto [lo_it, hi_it] = std::minmax_element(img.data.begin(), img.data.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (hi == lo) {
        std::fill(img.data.begin(), img.data.end(), 0.0);
        return;
    }
    const double inv = 1.0 / (hi - lo);
    for (auto& v : img.data) v = (v - lo) * inv;
}

inline Image normalized_minmax(Image img) {
    normalize_minmax(img);
    return img;
}

inline void binarize(Mask& m, double threshold = 0.5) {
    for (auto& v : m.data) v = v >= threshold ? 1.0 : 0.0;
}

// Reverse the x axis (2D and 3D).
inline Image flip_horizontal(const Image& img) {
    Image out = img;
    for (std::int64_t z = 0; z < img.depth; ++z)
        for (std::int64_t y = 0; y < img.height; ++y)
            for (std::int64_t x = 0; x < img.width; ++x)
                for (std::int64_t c = 0; c < img.channels; ++c)
                    out.at(z, y, img.width - 1 - x, c) = img.at(z, y, x, c);
    return out;
}

// Rotate each z-slice by k*90 degrees counterclockwise. Height/width swap
// for odd k, consistently for image and mask pairs.
inline Image rotate90(const Image& img, int k) {
    k = ((k % 4) + 4) % 4;
    if (k == 0) return img;
    const bool swap = (k % 2) == 1;
    Image out(swap ? img.width : img.height, swap ? img.height : img.width, img.depth,
              img.channels);
    out.source_bit_depth = img.source_bit_depth;
    for (std::int64_t z = 0; z < img.depth; ++z)
        for (std::int64_t y = 0; y < img.height; ++y)
            for (std::int64_t x = 0; x < img.width; ++x) {
                std::int64_t ny = 0, nx = 0;
                switch (k) {
                    case 1: ny = img.width - 1 - x; nx = y; break;
                    case 2: ny = img.height - 1 - y; nx = img.width - 1 - x; break;
                    default: ny = x; nx = img.height - 1 - y; break;
                }
                for (std::int64_t c = 0; c < img.channels; ++c)
                    out.at(z, ny, nx, c) = img.at(z, y, x, c);
            }
    return out;
}

}  // namespace tenseg
