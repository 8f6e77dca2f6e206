#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "tenseg/common.hpp"
#include "tenseg/image.hpp"

namespace tenseg {

// Synthetic blob-segmentation benchmark: 1-4 bright ellipses (intensity
// 0.6-0.9) on a dark background (0.1-0.3) with additive Gaussian noise
// sigma 0.05 clamped to [0,1]; the mask is the ellipse union. Geometry is
// chosen so every mask covers roughly 5-50% of the image. Fully determined
// by the seed.
inline std::vector<Sample> gen_synthetic(std::int64_t n, std::int64_t size, std::uint64_t seed,
                                         int dims = 2) {
    if (n < 1) throw ConfigError("gen_synthetic needs n >= 1");
    if (size < 16) throw ConfigError("gen_synthetic needs size >= 16");
    if (dims != 2 && dims != 3) throw ConfigError("gen_synthetic dims must be 2 or 3");

    Rng rng(seed);
    std::vector<Sample> samples;
    samples.reserve(static_cast<std::size_t>(n));
    const double fs = static_cast<double>(size);

    for (std::int64_t k = 0; k < n; ++k) {
        const std::int64_t depth = dims == 3 ? size : 1;
        Image img(size, size, depth, 1);
        Mask mask(size, size, depth, 1);
        const double background = rng.uniform(0.1, 0.3);
        std::fill(img.data.begin(), img.data.end(), background);

        struct Blob {
            double cx, cy, cz, ax, ay, az, cosr, sinr, intensity;
        };
        std::vector<Blob> blobs;
        const std::int64_t count = rng.uniform_int(1, dims == 3 ? 3 : 4);
        for (std::int64_t e = 0; e < count; ++e) {
            Blob b{};
            if (dims == 2) {
                b.cx = rng.uniform(0.25, 0.75) * fs;
                b.cy = rng.uniform(0.25, 0.75) * fs;
                b.cz = 0.0;
                b.ax = rng.uniform(0.14, 0.19) * fs;
                b.ay = rng.uniform(0.14, 0.19) * fs;
                b.az = 1.0;
                const double rot = rng.uniform(0.0, 3.14159265358979323846);
                b.cosr = std::cos(rot);
                b.sinr = std::sin(rot);
            } else {
                b.cx = rng.uniform(0.32, 0.68) * fs;
                b.cy = rng.uniform(0.32, 0.68) * fs;
                b.cz = rng.uniform(0.32, 0.68) * fs;
                b.ax = rng.uniform(0.26, 0.30) * fs;
                b.ay = rng.uniform(0.26, 0.30) * fs;
                b.az = rng.uniform(0.26, 0.30) * fs;
                b.cosr = 1.0;
                b.sinr = 0.0;
            }
            b.intensity = rng.uniform(0.6, 0.9);
            blobs.push_back(b);
        }

        for (std::int64_t z = 0; z < depth; ++z)
            for (std::int64_t y = 0; y < size; ++y)
                for (std::int64_t x = 0; x < size; ++x) {
                    const double px = static_cast<double>(x) + 0.5;
                    const double py = static_cast<double>(y) + 0.5;
                    const double pz = static_cast<double>(z) + 0.5;
                    for (const auto& b : blobs) {
                        const double dx = px - b.cx;
                        const double dy = py - b.cy;
                        double inside;
                        if (dims == 2) {
                            const double u = dx * b.cosr + dy * b.sinr;
                            const double v = -dx * b.sinr + dy * b.cosr;
                            inside = (u / b.ax) * (u / b.ax) + (v / b.ay) * (v / b.ay);
                        } else {
                            const double dz = pz - b.cz;
                            inside = (dx / b.ax) * (dx / b.ax) + (dy / b.ay) * (dy / b.ay) +
                                     (dz / b.az) * (dz / b.az);
                        }
                        if (inside <= 1.0) {
                            img.at(z, y, x) = b.intensity;
                            mask.at(z, y, x) = 1.0;
                        }
                    }
                }

        for (auto& v : img.data) {
            v += rng.normal(0.0, 0.05);
            v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        }

        Sample s;
        s.image = std::move(img);
        s.mask = std::move(mask);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "sample_%04lld", static_cast<long long>(k));
        s.id = buf;
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace tenseg
