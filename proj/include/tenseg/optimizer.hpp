#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tenseg/common.hpp"

namespace tenseg {

// Adam with bias correction; one flat moment buffer covers all parameter
// segments in their canonical order.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t step = 0;

    static AdamState zeros(std::int64_t n) {
        AdamState s;
        s.m.assign(static_cast<std::size_t>(n), 0.0);
        s.v.assign(static_cast<std::size_t>(n), 0.0);
        return s;
    }
};

struct AdamOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    // Global L2 clip applied to the gradient before the moment update;
    // <= 0 disables clipping.
    double clip_norm = 1.0;
};

inline double global_norm(const std::vector<std::span<const double>>& grads) {
    double sq = 0.0;
    for (const auto& g : grads)
        for (double v : g) sq += v * v;
    return std::sqrt(sq);
}

// One update step. `params` and `grads` must be segment-wise congruent.
// NaN/Inf gradients abort with a NumericError; the caller adds epoch/patch
// context.
inline void adam_step(std::vector<std::span<double>> params,
                      std::vector<std::span<const double>> grads, AdamState& state, double lr,
                      const AdamOptions& opt = {}) {
    if (params.size() != grads.size()) {
        throw DimensionError("adam_step: segment count mismatch");
    }
    std::size_t total = 0;
    for (std::size_t s = 0; s < params.size(); ++s) {
        if (params[s].size() != grads[s].size()) {
            throw DimensionError("adam_step: segment " + std::to_string(s) + " size mismatch");
        }
        total += params[s].size();
    }
    if (state.m.size() != total) {
        throw DimensionError("adam_step: optimizer state sized for " +
                             std::to_string(state.m.size()) + " parameters, model has " +
                             std::to_string(total));
    }

    double norm_sq = 0.0;
    for (const auto& g : grads)
        for (double v : g) {
            if (!std::isfinite(v)) {
                throw NumericError("non-finite gradient reached the optimizer");
            }
            norm_sq += v * v;
        }
    double scale = 1.0;
    if (opt.clip_norm > 0.0) {
        const double norm = std::sqrt(norm_sq);
        if (norm > opt.clip_norm) scale = opt.clip_norm / norm;
    }

    state.step += 1;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.step));
    std::size_t k = 0;
    for (std::size_t s = 0; s < params.size(); ++s) {
        auto p = params[s];
        const auto g = grads[s];
        for (std::size_t i = 0; i < p.size(); ++i, ++k) {
            const double gi = g[i] * scale;
            state.m[k] = opt.beta1 * state.m[k] + (1.0 - opt.beta1) * gi;
            state.v[k] = opt.beta2 * state.v[k] + (1.0 - opt.beta2) * gi * gi;
            const double mhat = state.m[k] / bc1;
            const double vhat = state.v[k] / bc2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + opt.eps);
        }
    }
}

}  // namespace tenseg
