#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tenseg/common.hpp"

namespace tenseg {

enum class LossKind { CrossEntropy, Dice };

inline std::string to_string(LossKind k) {
    return k == LossKind::CrossEntropy ? "cross-entropy" : "dice";
}

inline LossKind loss_kind_from_string(const std::string& s) {
    if (s == "cross-entropy" || s == "bce") return LossKind::CrossEntropy;
    if (s == "dice") return LossKind::Dice;
    throw ConfigError("unknown loss '" + s + "' (expected cross-entropy or dice)");
}

inline double sigmoid(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

struct LossResult {
    double value = 0.0;
    std::vector<double> grad;  // d value / d logits
};

// Mean binary cross-entropy over sigmoid(logits), in the log-sum-exp form
// max(z,0) - z*t + log1p(exp(-|z|)) so saturated logits cannot overflow.
// grad = (sigmoid(z) - t) / n.
inline LossResult bce_loss(std::span<const double> logits, std::span<const double> targets) {
    if (logits.size() != targets.size()) {
        throw DimensionError("bce_loss: logits size " + std::to_string(logits.size()) +
                             " != targets size " + std::to_string(targets.size()));
    }
    const double inv_n = 1.0 / static_cast<double>(logits.size());
    LossResult res;
    res.grad.resize(logits.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double z = logits[i];
        const double t = targets[i];
        acc += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
        res.grad[i] = (sigmoid(z) - t) * inv_n;
    }
    res.value = acc * inv_n;
    return res;
}

// Soft Dice loss over the whole span jointly (all patches of the batch at
// once; per-patch Dice is degenerate on all-background patches):
//   p = sigmoid(z), loss = 1 - (2 sum(p t) + eps) / (sum p + sum t + eps).
inline LossResult dice_loss(std::span<const double> logits, std::span<const double> targets,
                            double eps = 1e-7) {
    if (logits.size() != targets.size()) {
        throw DimensionError("dice_loss: logits size " + std::to_string(logits.size()) +
                             " != targets size " + std::to_string(targets.size()));
    }
    std::vector<double> p(logits.size());
    double sum_pt = 0.0, sum_p = 0.0, sum_t = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = sigmoid(logits[i]);
        sum_pt += p[i] * targets[i];
        sum_p += p[i];
        sum_t += targets[i];
    }
    const double num = 2.0 * sum_pt + eps;
    const double den = sum_p + sum_t + eps;
    LossResult res;
    res.value = 1.0 - num / den;
    res.grad.resize(logits.size());
    const double inv_den2 = 1.0 / (den * den);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double dldp = -(2.0 * targets[i] * den - num) * inv_den2;
        res.grad[i] = dldp * p[i] * (1.0 - p[i]);
    }
    return res;
}

inline LossResult compute_loss(LossKind kind, std::span<const double> logits,
                               std::span<const double> targets) {
    return kind == LossKind::CrossEntropy ? bce_loss(logits, targets) : dice_loss(logits, targets);
}

}  // namespace tenseg
