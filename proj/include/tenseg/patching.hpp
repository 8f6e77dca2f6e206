#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tenseg/common.hpp"
#include "tenseg/image.hpp"

namespace tenseg {

// Bookkeeping between an image and its flattened non-overlapping patches.
// Patches tile a zero-padded copy of the image; the pad is cropped away on
// the way back. Patch lattice and in-patch pixels are both enumerated
// row-major (z, then y, then x), which fixes the MPS site order.
struct PatchGrid {
    int dims = 2;  // 2 or 3
    std::int64_t height = 0, width = 0, depth = 1;
    std::int64_t channels = 1;
    std::int64_t patch_edge = 0;  // K
    std::int64_t padded_height = 0, padded_width = 0, padded_depth = 1;
    std::int64_t patches_y = 0, patches_x = 0, patches_z = 1;

    std::int64_t patch_count() const { return patches_z * patches_y * patches_x; }
    std::int64_t pixels_per_patch() const {
        return dims == 3 ? patch_edge * patch_edge * patch_edge : patch_edge * patch_edge;
    }
};

inline std::int64_t round_up(std::int64_t n, std::int64_t k) { return (n + k - 1) / k * k; }

inline PatchGrid make_patch_grid(const Image& img, std::int64_t patch_edge, int dims) {
    if (patch_edge <= 1) {
        throw ConfigError("patch edge K must be >= 2, got " + std::to_string(patch_edge));
    }
    if (dims != 2 && dims != 3) {
        throw ConfigError("dims must be 2 or 3, got " + std::to_string(dims));
    }
    if (dims == 2 && img.depth > 1) {
        throw DimensionError("2D patch grid requested for a volume of depth " +
                             std::to_string(img.depth));
    }
    PatchGrid g;
    g.dims = dims;
    g.height = img.height;
    g.width = img.width;
    g.depth = img.depth;
    g.channels = img.channels;
    g.patch_edge = patch_edge;
    g.padded_height = round_up(img.height, patch_edge);
    g.padded_width = round_up(img.width, patch_edge);
    g.padded_depth = dims == 3 ? round_up(img.depth, patch_edge) : 1;
    g.patches_y = g.padded_height / patch_edge;
    g.patches_x = g.padded_width / patch_edge;
    g.patches_z = dims == 3 ? g.padded_depth / patch_edge : 1;
    return g;
}

// Flatten into per-patch pixel sequences of length K^dims * C, pixel-major
// ([pixel][channel]). Pixels beyond the image extent are zero.
inline std::vector<std::vector<double>> ravel(const Image& img, const PatchGrid& g) {
    const std::int64_t k = g.patch_edge;
    const std::int64_t kz = g.dims == 3 ? k : 1;
    std::vector<std::vector<double>> patches(
        static_cast<std::size_t>(g.patch_count()),
        std::vector<double>(static_cast<std::size_t>(g.pixels_per_patch() * g.channels), 0.0));
    for (std::int64_t pz = 0; pz < g.patches_z; ++pz)
        for (std::int64_t py = 0; py < g.patches_y; ++py)
            for (std::int64_t px = 0; px < g.patches_x; ++px) {
                auto& seq = patches[static_cast<std::size_t>((pz * g.patches_y + py) * g.patches_x + px)];
                std::size_t w = 0;
                for (std::int64_t dz = 0; dz < kz; ++dz)
                    for (std::int64_t dy = 0; dy < k; ++dy)
                        for (std::int64_t dx = 0; dx < k; ++dx) {
                            const std::int64_t z = pz * k + dz;
                            const std::int64_t y = py * k + dy;
                            const std::int64_t x = px * k + dx;
                            const bool inside = z < img.depth && y < img.height && x < img.width;
                            for (std::int64_t c = 0; c < g.channels; ++c) {
                                seq[w++] = inside ? img.at(z, y, x, c) : 0.0;
                            }
                        }
            }
    return patches;
}

inline std::pair<PatchGrid, std::vector<std::vector<double>>> ravel(const Image& img,
                                                                    std::int64_t patch_edge,
                                                                    int dims = 2) {
    PatchGrid g = make_patch_grid(img, patch_edge, dims);
    return {g, ravel(img, g)};
}

// Tile per-patch predictions (length K^dims * M each, pixel-major) back onto
// the padded grid, then crop to the original extent.
inline Image unravel(const PatchGrid& g, const std::vector<std::vector<double>>& patch_values,
                     std::int64_t value_channels = 1) {
    if (static_cast<std::int64_t>(patch_values.size()) != g.patch_count()) {
        throw DimensionError("unravel expected " + std::to_string(g.patch_count()) +
                             " patches, got " + std::to_string(patch_values.size()));
    }
    const std::int64_t expected_len = g.pixels_per_patch() * value_channels;
    const std::int64_t k = g.patch_edge;
    const std::int64_t kz = g.dims == 3 ? k : 1;
    Image out(g.height, g.width, g.depth, value_channels);
    for (std::int64_t pz = 0; pz < g.patches_z; ++pz)
        for (std::int64_t py = 0; py < g.patches_y; ++py)
            for (std::int64_t px = 0; px < g.patches_x; ++px) {
                const auto& seq =
                    patch_values[static_cast<std::size_t>((pz * g.patches_y + py) * g.patches_x + px)];
                if (static_cast<std::int64_t>(seq.size()) != expected_len) {
                    throw DimensionError("unravel patch length " + std::to_string(seq.size()) +
                                         " != expected " + std::to_string(expected_len));
                }
                std::size_t r = 0;
                for (std::int64_t dz = 0; dz < kz; ++dz)
                    for (std::int64_t dy = 0; dy < k; ++dy)
                        for (std::int64_t dx = 0; dx < k; ++dx) {
                            const std::int64_t z = pz * k + dz;
                            const std::int64_t y = py * k + dy;
                            const std::int64_t x = px * k + dx;
                            if (z < g.depth && y < g.height && x < g.width) {
                                for (std::int64_t c = 0; c < value_channels; ++c)
                                    out.at(z, y, x, c) = seq[r + static_cast<std::size_t>(c)];
                            }
                            r += static_cast<std::size_t>(value_channels);
                        }
            }
    return out;
}

}  // namespace tenseg
