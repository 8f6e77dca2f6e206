#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tenseg/common.hpp"
#include "tenseg/image.hpp"

namespace tenseg {

// Dice overlap of the thresholded prediction against a binary mask:
// 2|P & G| / (|P| + |G|). Both empty counts as a correct all-background
// prediction and scores 1.0.
inline double dice(std::span<const double> pred_soft, std::span<const double> gt,
                   double threshold = 0.5) {
    if (pred_soft.size() != gt.size()) {
        throw DimensionError("dice: prediction size " + std::to_string(pred_soft.size()) +
                             " != mask size " + std::to_string(gt.size()));
    }
    std::int64_t inter = 0, p = 0, g = 0;
    for (std::size_t i = 0; i < pred_soft.size(); ++i) {
        const bool pi = pred_soft[i] >= threshold;
        const bool gi = gt[i] >= 0.5;
        p += pi;
        g += gi;
        inter += pi && gi;
    }
    if (p + g == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(p + g);
}

inline double dice(const Image& pred_soft, const Mask& gt, double threshold = 0.5) {
    if (!pred_soft.same_spatial_dims(gt)) {
        throw DimensionError("dice: prediction and mask dims differ");
    }
    return dice(std::span<const double>(pred_soft.data), std::span<const double>(gt.data),
                threshold);
}

// Average precision over the descending-score sweep with tied scores
// grouped into a single step: sum_k (R_k - R_{k-1}) * P_k. Depends on the
// score ranks only.
inline double prauc(std::span<const double> scores, std::span<const double> labels) {
    if (scores.size() != labels.size()) {
        throw DimensionError("prauc: scores size " + std::to_string(scores.size()) +
                             " != labels size " + std::to_string(labels.size()));
    }
    std::int64_t total_pos = 0;
    for (double l : labels) total_pos += l >= 0.5;
    if (total_pos == 0) {
        throw NumericError("prauc undefined: no positive labels");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double ap = 0.0;
    double prev_recall = 0.0;
    std::int64_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            if (labels[order[j]] >= 0.5) ++tp; else ++fp;
            ++j;
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    return ap;
}

// Per-image Dice plus pooled PRAUC over an evaluation set.
struct EvalReport {
    std::vector<std::string> ids;
    std::vector<double> dice_scores;
    double mean_dice = 0.0;
    double std_dice = 0.0;
    double prauc = 0.0;

    void finalize_summary() {
        if (dice_scores.empty()) {
            mean_dice = std_dice = 0.0;
            return;
        }
        const double n = static_cast<double>(dice_scores.size());
        mean_dice = std::accumulate(dice_scores.begin(), dice_scores.end(), 0.0) / n;
        double sq = 0.0;
        for (double d : dice_scores) sq += (d - mean_dice) * (d - mean_dice);
        std_dice = std::sqrt(sq / n);
    }

    std::string to_csv() const {
        std::ostringstream os;
        os.precision(17);
        os << "image,dice\n";
        for (std::size_t i = 0; i < dice_scores.size(); ++i) {
            os << (i < ids.size() ? ids[i] : std::to_string(i)) << "," << dice_scores[i] << "\n";
        }
        os << "mean," << mean_dice << "\n";
        os << "std," << std_dice << "\n";
        os << "prauc," << prauc << "\n";
        return os.str();
    }
};

}  // namespace tenseg
