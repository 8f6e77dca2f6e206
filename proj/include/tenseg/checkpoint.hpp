#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tenseg/common.hpp"
#include "tenseg/config.hpp"
#include "tenseg/model_config.hpp"
#include "tenseg/mps.hpp"

namespace tenseg {

// Checkpoint layout (all integers little-endian):
//   "STNT" | u32 format version | u64 metadata length | metadata JSON |
//   raw parameter payload, sites in chain order then the output tensor.
// Parameters are f64 by default; f32 is an optional storage mode recorded
// in the metadata ("dtype"). Loading always restores f64 computation.
inline constexpr char kCheckpointMagic[4] = {'S', 'T', 'N', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class CheckpointDtype { F64, F32 };

struct Checkpoint {
    MpsModel model;
    ModelConfig config;
    nlohmann::json metadata;
};

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError("truncated checkpoint header");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline std::uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw ParseError("truncated checkpoint header");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, const MpsModel& model,
                            const ModelConfig& cfg, const nlohmann::json& extra = {},
                            CheckpointDtype dtype = CheckpointDtype::F64) {
    nlohmann::json meta;
    meta["model"] = to_json(cfg);
    meta["num_sites"] = model.num_sites;
    meta["feature_dim"] = model.feature_dim;
    meta["output_dim"] = model.output_dim;
    meta["bond_dim"] = model.bond_dim;
    meta["output_slot"] = model.output_slot;
    meta["dtype"] = dtype == CheckpointDtype::F64 ? "f64" : "f32";
    if (!extra.is_null() && !extra.empty()) meta["extra"] = extra;
    const std::string meta_str = meta.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out.write(kCheckpointMagic, 4);
    detail::write_u32(out, kCheckpointVersion);
    detail::write_u64(out, meta_str.size());
    out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
    for (const auto& span : parameter_spans(model)) {
        if (dtype == CheckpointDtype::F64) {
            out.write(reinterpret_cast<const char*>(span.data()),
                      static_cast<std::streamsize>(span.size() * sizeof(double)));
        } else {
            std::vector<float> tmp(span.size());
            for (std::size_t i = 0; i < span.size(); ++i) tmp[i] = static_cast<float>(span[i]);
            out.write(reinterpret_cast<const char*>(tmp.data()),
                      static_cast<std::streamsize>(tmp.size() * sizeof(float)));
        }
    }
    if (!out) throw IoError("short write to checkpoint " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
        throw ParseError("not a tenseg checkpoint (bad magic)", 0);
    }
    const std::uint32_t version = detail::read_u32(in);
    if (version != kCheckpointVersion) {
        throw ParseError("unsupported checkpoint version " + std::to_string(version));
    }
    const std::uint64_t meta_len = detail::read_u64(in);
    std::string meta_str(meta_len, '\0');
    if (!in.read(meta_str.data(), static_cast<std::streamsize>(meta_len))) {
        throw ParseError("truncated checkpoint metadata");
    }
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_str);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid checkpoint metadata: ") + e.what());
    }

    Checkpoint ck;
    ck.metadata = meta;
    ck.config = model_config_from_json(meta.at("model"));
    const auto num_sites = meta.at("num_sites").get<std::int64_t>();
    const auto feature_dim = meta.at("feature_dim").get<std::int64_t>();
    const auto output_dim = meta.at("output_dim").get<std::int64_t>();
    const auto bond_dim = meta.at("bond_dim").get<std::int64_t>();
    const auto output_slot = meta.at("output_slot").get<std::int64_t>();
    if (num_sites != ck.config.num_sites() || feature_dim != ck.config.feature_dim() ||
        output_dim != ck.config.output_dim() || bond_dim != ck.config.bond_dim) {
        throw ParseError("checkpoint geometry does not match its model config");
    }

    MpsModel& m = ck.model;
    m.num_sites = num_sites;
    m.feature_dim = feature_dim;
    m.output_dim = output_dim;
    m.bond_dim = bond_dim;
    m.output_slot = output_slot;
    m.sites.reserve(static_cast<std::size_t>(num_sites));
    for (std::int64_t j = 0; j < num_sites; ++j) {
        m.sites.emplace_back(
            std::vector<std::int64_t>{m.bond(j), feature_dim, m.bond(j + 1)});
    }
    m.output = DenseTensor({m.bond(output_slot), output_dim, m.bond(output_slot)});

    const bool f32 = meta.value("dtype", "f64") == "f32";
    for (auto& span : parameter_spans(m)) {
        if (f32) {
            std::vector<float> tmp(span.size());
            if (!in.read(reinterpret_cast<char*>(tmp.data()),
                         static_cast<std::streamsize>(tmp.size() * sizeof(float)))) {
                throw ParseError("truncated checkpoint payload");
            }
            for (std::size_t i = 0; i < span.size(); ++i) span[i] = tmp[i];
        } else {
            if (!in.read(reinterpret_cast<char*>(span.data()),
                         static_cast<std::streamsize>(span.size() * sizeof(double)))) {
                throw ParseError("truncated checkpoint payload");
            }
        }
    }
    return ck;
}

}  // namespace tenseg
