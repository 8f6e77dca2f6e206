#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tenseg/common.hpp"
#include "tenseg/model_config.hpp"
#include "tenseg/trainer.hpp"

namespace tenseg {

// One JSON config drives the whole pipeline; CLI flags override keys.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    std::vector<double> split{0.6, 0.2, 0.2};
};

namespace detail {

template <typename T>
T require_key(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key)) {
        throw ConfigError("missing config key: " + key);
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

template <typename T>
T key_or(const nlohmann::json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

}  // namespace detail

inline nlohmann::json to_json(const ModelConfig& m) {
    return nlohmann::json{
        {"dims", m.dims},
        {"patch_size", m.patch_edge},
        {"bond_dim", m.bond_dim},
        {"channels", m.channels},
        {"classes", m.classes},
        {"feature_map", {{"kind", to_string(m.fm_kind)}, {"d", m.fm_dim}}},
    };
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig m;
    m.dims = static_cast<int>(detail::key_or<std::int64_t>(j, "dims", 2));
    m.patch_edge = detail::require_key<std::int64_t>(j, "patch_size");
    m.bond_dim = detail::require_key<std::int64_t>(j, "bond_dim");
    m.channels = detail::key_or<std::int64_t>(j, "channels", 1);
    m.classes = detail::key_or<std::int64_t>(j, "classes", 1);
    if (j.contains("feature_map")) {
        const auto& fm = j.at("feature_map");
        m.fm_kind = feature_map_kind_from_string(
            detail::key_or<std::string>(fm, "kind", "binomial-sinusoidal"));
        m.fm_dim = detail::key_or<std::int64_t>(fm, "d", 4);
    }
    m.validate();
    return m;
}

inline nlohmann::json to_json(const TrainConfig& t) {
    return nlohmann::json{
        {"lr", t.lr},
        {"batch_size", t.batch_size},
        {"max_epochs", t.max_epochs},
        {"patience", t.patience},
        {"loss", to_string(t.loss)},
        {"seed", t.seed},
        {"deterministic", t.deterministic},
        {"clip_norm", t.clip_norm},
        {"augment", t.augment},
        {"threads", t.threads},
    };
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig t;
    t.lr = detail::key_or<double>(j, "lr", 5e-4);
    t.batch_size = detail::key_or<std::int64_t>(j, "batch_size", 4);
    t.max_epochs = detail::key_or<std::int64_t>(j, "max_epochs", 300);
    t.patience = detail::key_or<std::int64_t>(j, "patience", 10);
    t.loss = loss_kind_from_string(detail::key_or<std::string>(j, "loss", "cross-entropy"));
    t.seed = detail::key_or<std::uint64_t>(j, "seed", 42);
    t.deterministic = detail::key_or<bool>(j, "deterministic", true);
    t.clip_norm = detail::key_or<double>(j, "clip_norm", 1.0);
    t.augment = detail::key_or<bool>(j, "augment", false);
    t.threads = static_cast<int>(detail::key_or<std::int64_t>(j, "threads", 1));
    t.validate();
    return t;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known = {
        "dims",      "patch_size", "bond_dim",      "channels",  "classes", "feature_map",
        "lr",        "batch_size", "max_epochs",    "patience",  "loss",    "seed",
        "deterministic", "clip_norm", "augment",    "threads",   "split"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) {
            std::cerr << "tenseg: ignoring unknown config key '" << it.key() << "'\n";
        }
    }
    RunConfig rc;
    rc.model = model_config_from_json(j);
    rc.train = train_config_from_json(j);
    rc.split = detail::key_or<std::vector<double>>(j, "split", {0.6, 0.2, 0.2});
    if (rc.split.size() != 3) {
        throw ConfigError("config key 'split' must hold 3 fractions");
    }
    return rc;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("invalid JSON in " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    return run_config_from_json(j);
}

}  // namespace tenseg
