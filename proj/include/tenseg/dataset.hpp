#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tenseg/common.hpp"
#include "tenseg/image.hpp"
#include "tenseg/pnm_io.hpp"
#include "tenseg/volume_io.hpp"

namespace tenseg {

// Dataset layout on disk:
//   root/images/*.pgm|*.ppm   (2D)  or  *.stv (3D)
//   root/masks/<same-stem>.pgm       or  <same-stem>.stv
// Pairing is by filename stem; stems are processed in sorted order so runs
// are reproducible regardless of directory enumeration order.

inline void save_dataset(const std::filesystem::path& root, const std::vector<Sample>& samples) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(root / "images", ec);
    fs::create_directories(root / "masks", ec);
    if (!fs::is_directory(root / "images") || !fs::is_directory(root / "masks")) {
        throw IoError("cannot create dataset directories under " + root.string());
    }
    for (const auto& s : samples) {
        if (s.image.is_3d()) {
            save_volume(root / "images" / (s.id + ".stv"), s.image);
            save_volume(root / "masks" / (s.id + ".stv"), s.mask);
        } else {
            save_pnm(root / "images" / (s.id + (s.image.channels == 3 ? ".ppm" : ".pgm")),
                     s.image);
            save_pnm(root / "masks" / (s.id + ".pgm"), s.mask);
        }
    }
}

inline Image load_any_image(const std::filesystem::path& path) {
    return path.extension() == ".stv" ? load_volume(path) : load_pnm(path);
}

inline std::vector<Sample> load_dataset(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    const fs::path images_dir = root / "images";
    const fs::path masks_dir = root / "masks";
    if (!fs::is_directory(images_dir)) {
        throw ConfigError("dataset root " + root.string() + " has no images/ directory");
    }
    std::vector<fs::path> image_files;
    for (const auto& entry : fs::directory_iterator(images_dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension();
        if (ext == ".pgm" || ext == ".ppm" || ext == ".stv") image_files.push_back(entry.path());
    }
    std::sort(image_files.begin(), image_files.end());
    if (image_files.empty()) {
        throw ConfigError("no images found under " + images_dir.string());
    }
    std::vector<Sample> samples;
    samples.reserve(image_files.size());
    for (const auto& img_path : image_files) {
        const std::string stem = img_path.stem().string();
        fs::path mask_path = masks_dir / (stem + ".pgm");
        if (!fs::exists(mask_path)) mask_path = masks_dir / (stem + ".stv");
        if (!fs::exists(mask_path)) {
            throw ConfigError("missing mask for image '" + stem + "' under " +
                              masks_dir.string());
        }
        Sample s;
        s.image = load_any_image(img_path);
        s.mask = load_any_image(mask_path);
        if (!s.image.same_spatial_dims(s.mask)) {
            throw DimensionError("image/mask dims differ for '" + stem + "'");
        }
        binarize(s.mask);
        s.id = stem;
        samples.push_back(std::move(s));
    }
    return samples;
}

struct SplitResult {
    std::vector<Sample> train, val, test;
};

// Seeded shuffle then partition; disjoint and exhaustive.
inline SplitResult split_dataset(std::vector<Sample> samples, const std::vector<double>& fractions,
                                 std::uint64_t seed) {
    if (fractions.size() != 3) {
        throw ConfigError("split expects 3 fractions (train, val, test)");
    }
    const double sum = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError("split fractions must sum to 1, got " + std::to_string(sum));
    }
    const auto n = static_cast<std::int64_t>(samples.size());
    const std::int64_t n_train = std::llround(fractions[0] * static_cast<double>(n));
    const std::int64_t n_val = std::llround(fractions[1] * static_cast<double>(n));
    const std::int64_t n_test = n - n_train - n_val;
    if (n_train < 1 || n_val < 1 || n_test < 1) {
        throw ConfigError("split produces an empty partition (" + std::to_string(n_train) + "/" +
                          std::to_string(n_val) + "/" + std::to_string(n_test) + " of " +
                          std::to_string(n) + ")");
    }
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    SplitResult out;
    for (std::int64_t i = 0; i < n; ++i) {
        auto& dst = i < n_train ? out.train : (i < n_train + n_val ? out.val : out.test);
        dst.push_back(std::move(samples[order[static_cast<std::size_t>(i)]]));
    }
    return out;
}

}  // namespace tenseg
