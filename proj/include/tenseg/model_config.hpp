#pragma once

#include <cstdint>
#include <string>

#include "tenseg/common.hpp"
#include "tenseg/feature_map.hpp"
#include "tenseg/mps.hpp"

namespace tenseg {

// Hyperparameters that fix the model geometry.
struct ModelConfig {
    int dims = 2;
    std::int64_t patch_edge = 0;  // K
    std::int64_t bond_dim = 0;    // beta
    std::int64_t channels = 1;    // C
    std::int64_t classes = 1;     // M
    FeatureMapKind fm_kind = FeatureMapKind::BinomialSinusoidal;
    std::int64_t fm_dim = 4;  // d

    void validate() const {
        if (dims != 2 && dims != 3) throw ConfigError("dims must be 2 or 3");
        if (patch_edge < 2) throw ConfigError("patch_size must be >= 2");
        if (bond_dim < 1) throw ConfigError("bond_dim must be >= 1");
        if (channels < 1) throw ConfigError("channels must be >= 1");
        if (classes < 1) throw ConfigError("classes must be >= 1");
        LocalFeatureMap(fm_kind, fm_dim);  // validates kind/d combination
    }

    std::int64_t num_sites() const {
        std::int64_t n = patch_edge * patch_edge;
        return dims == 3 ? n * patch_edge : n;
    }
    std::int64_t feature_dim() const { return channels * fm_dim; }
    std::int64_t output_dim() const { return num_sites() * classes; }

    LocalFeatureMap feature_map() const { return LocalFeatureMap(fm_kind, fm_dim); }

    MpsModel make_model(std::uint64_t seed) const {
        validate();
        return make_mps(num_sites(), feature_dim(), output_dim(), bond_dim, seed);
    }
};

}  // namespace tenseg
