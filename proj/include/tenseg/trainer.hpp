#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "tenseg/common.hpp"
#include "tenseg/dataset.hpp"
#include "tenseg/image.hpp"
#include "tenseg/loss.hpp"
#include "tenseg/metrics.hpp"
#include "tenseg/model_config.hpp"
#include "tenseg/mps.hpp"
#include "tenseg/optimizer.hpp"
#include "tenseg/patching.hpp"

namespace tenseg {

struct TrainConfig {
    double lr = 5e-4;
    std::int64_t batch_size = 4;
    std::int64_t max_epochs = 300;
    std::int64_t patience = 10;
    LossKind loss = LossKind::CrossEntropy;
    std::uint64_t seed = 42;
    bool deterministic = true;
    double clip_norm = 1.0;
    bool augment = false;
    int threads = 1;

    void validate() const {
        if (lr <= 0.0) throw ConfigError("lr must be > 0");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
        if (patience < 0) throw ConfigError("patience must be >= 0");
        if (patience > max_epochs) throw ConfigError("patience must be <= max_epochs");
        if (clip_norm <= 0.0) throw ConfigError("clip_norm must be > 0");
        if (threads < 1) throw ConfigError("threads must be >= 1");
    }
};

struct EpochStats {
    std::int64_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_dice = 0.0;
    bool improved = false;
};

struct FitResult {
    std::vector<EpochStats> history;
    double best_val_dice = 0.0;
    std::int64_t best_epoch = 0;
    std::int64_t epochs_run = 0;
};

// Called after every epoch with the live (not best-so-far) model.
using EpochCallback = std::function<void(const MpsModel&, const EpochStats&)>;

namespace detail {

// Run fn(begin, end, chunk) over [0,n) split into `threads` contiguous
// chunks. Chunk boundaries depend only on (n, threads), so reductions done
// in chunk order are reproducible for a fixed thread count.
template <typename Fn>
void parallel_chunks(std::int64_t n, int threads, Fn&& fn) {
    if (threads <= 1 || n < 2) {
        if (n > 0) fn(std::int64_t{0}, n, 0);
        return;
    }
    const int used = static_cast<int>(std::min<std::int64_t>(threads, n));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(used));
    const std::int64_t per = (n + used - 1) / used;
    for (int t = 0; t < used; ++t) {
        const std::int64_t begin = t * per;
        const std::int64_t end = std::min<std::int64_t>(begin + per, n);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end, t] { fn(begin, end, t); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace detail

// Feature sequence for one flattened patch: per pixel, the per-channel
// local feature vectors concatenated channel-major. Layout [site][feature],
// matching the MPS site order.
inline std::vector<double> patch_features(std::span<const double> patch_pixels,
                                          const LocalFeatureMap& fmap, std::int64_t channels) {
    const std::int64_t f = channels * fmap.dim();
    const std::int64_t n_pixels = static_cast<std::int64_t>(patch_pixels.size()) / channels;
    std::vector<double> out(static_cast<std::size_t>(n_pixels * f));
    for (std::int64_t t = 0; t < n_pixels; ++t) {
        fmap.apply_channels_into(
            patch_pixels.subspan(static_cast<std::size_t>(t * channels),
                                 static_cast<std::size_t>(channels)),
            std::span<double>(out).subspan(static_cast<std::size_t>(t * f),
                                           static_cast<std::size_t>(f)));
    }
    return out;
}

// Soft per-pixel predictions (sigmoid of the logits), cropped to the
// image's original extent. Input is min-max normalized first.
inline Image predict_soft(const MpsModel& model, const ModelConfig& cfg, const Image& image,
                          int threads = 1) {
    if (image.channels != cfg.channels) {
        throw ConfigError("model expects " + std::to_string(cfg.channels) +
                          " channel(s), image has " + std::to_string(image.channels));
    }
    const Image img = normalized_minmax(image);
    const PatchGrid grid = make_patch_grid(img, cfg.patch_edge, cfg.dims);
    const auto patches = ravel(img, grid);
    const LocalFeatureMap fmap = cfg.feature_map();
    std::vector<std::vector<double>> values(patches.size());
    detail::parallel_chunks(
        static_cast<std::int64_t>(patches.size()), threads,
        [&](std::int64_t begin, std::int64_t end, int) {
            for (std::int64_t p = begin; p < end; ++p) {
                const auto feats = patch_features(patches[static_cast<std::size_t>(p)], fmap,
                                                  cfg.channels);
                auto logits = forward(model, feats);
                for (auto& z : logits) z = sigmoid(z);
                values[static_cast<std::size_t>(p)] = std::move(logits);
            }
        });
    return unravel(grid, values, cfg.classes);
}

inline Mask threshold_mask(const Image& soft, double threshold = 0.5) {
    Mask m = soft;
    binarize(m, threshold);
    return m;
}

// Per-image Dice at the 0.5 threshold plus PRAUC pooled over every pixel of
// the set, computed on the soft predictions.
inline EvalReport evaluate_dataset(const MpsModel& model, const ModelConfig& cfg,
                                   const std::vector<Sample>& samples, int threads = 1) {
    EvalReport report;
    std::vector<double> all_scores;
    std::vector<double> all_labels;
    for (const auto& s : samples) {
        const Image soft = predict_soft(model, cfg, s.image, threads);
        report.ids.push_back(s.id);
        report.dice_scores.push_back(dice(soft, s.mask));
        all_scores.insert(all_scores.end(), soft.data.begin(), soft.data.end());
        all_labels.insert(all_labels.end(), s.mask.data.begin(), s.mask.data.end());
    }
    report.finalize_summary();
    report.prauc = prauc(all_scores, all_labels);
    return report;
}

namespace detail {

struct PatchWork {
    std::vector<double> features;
    std::vector<double> targets;
};

// Ravel one sample into per-patch feature sequences and targets. Pad
// pixels carry zero features and zero targets.
inline void collect_patches(const Sample& s, const ModelConfig& cfg, const LocalFeatureMap& fmap,
                            std::vector<PatchWork>& out) {
    const PatchGrid grid = make_patch_grid(s.image, cfg.patch_edge, cfg.dims);
    const auto pixel_seqs = ravel(s.image, grid);
    const auto target_seqs = ravel(s.mask, grid);
    for (std::size_t p = 0; p < pixel_seqs.size(); ++p) {
        PatchWork w;
        w.features = patch_features(pixel_seqs[p], fmap, cfg.channels);
        w.targets = target_seqs[p];
        out.push_back(std::move(w));
    }
}

// Mean log of the chain contraction scale, measured with per-site
// renormalized sweeps so long chains cannot under/overflow the probe.
inline double mean_log_chain_scale(const MpsModel& model, const std::vector<PatchWork>& patches) {
    double total = 0.0;
    std::int64_t counted = 0;
    for (const auto& w : patches) {
        const std::int64_t n = model.num_sites;
        std::vector<double> l{1.0};
        double log_scale = 0.0;
        bool degenerate = false;
        for (std::int64_t j = 0; j < n; ++j) {
            std::vector<double> mat(static_cast<std::size_t>(model.bond(j) * model.bond(j + 1)));
            contract_site_into(model.sites[static_cast<std::size_t>(j)].data(), model.bond(j),
                               model.feature_dim, model.bond(j + 1),
                               std::span<const double>(w.features)
                                   .subspan(static_cast<std::size_t>(j * model.feature_dim),
                                            static_cast<std::size_t>(model.feature_dim)),
                               mat);
            l = row_times_mat(l, mat, model.bond(j), model.bond(j + 1));
            double nrm = 0.0;
            for (double v : l) nrm += v * v;
            nrm = std::sqrt(nrm);
            if (!(nrm > 1e-300)) {
                degenerate = true;
                break;
            }
            log_scale += std::log(nrm);
            for (auto& v : l) v /= nrm;
        }
        if (!degenerate) {
            total += log_scale;
            ++counted;
        }
    }
    return counted > 0 ? total / static_cast<double>(counted) : 0.0;
}

}  // namespace detail

// Rescale all site tensors by a common factor so the typical contraction
// scale over the given patches is O(1). Near-identity chains otherwise
// start exp(~N) away from useful output magnitudes once N is large, and
// Adam's epsilon floor stalls on the resulting gradients.
inline double calibrate_chain_scale(MpsModel& model, const std::vector<Sample>& samples,
                                    const ModelConfig& cfg, std::size_t max_images = 4) {
    const LocalFeatureMap fmap = cfg.feature_map();
    std::vector<detail::PatchWork> patches;
    for (std::size_t i = 0; i < samples.size() && i < max_images; ++i) {
        Sample s = samples[i];
        normalize_minmax(s.image);
        detail::collect_patches(s, cfg, fmap, patches);
    }
    if (patches.empty()) return 1.0;
    const double mean_log = detail::mean_log_chain_scale(model, patches);
    const double factor = std::exp(-mean_log / static_cast<double>(model.num_sites));
    for (auto& site : model.sites)
        for (auto& v : site.data()) v *= factor;
    return factor;
}

// Full training loop: seeded shuffling, minibatches over images, joint
// batch loss over all patch logits, gradient accumulation across patches,
// Adam with global-norm clipping, validation Dice at 0.5 for model
// selection, early stopping after `patience` stagnant epochs. The model is
// left holding the best-by-validation-Dice parameters.
inline FitResult fit(MpsModel& model, const ModelConfig& cfg, const TrainConfig& tcfg,
                     std::vector<Sample> train, std::vector<Sample> val,
                     const EpochCallback& callback = nullptr) {
    cfg.validate();
    tcfg.validate();
    if (train.empty() || val.empty()) {
        throw ConfigError("fit requires non-empty train and validation sets");
    }
    for (auto* set : {&train, &val}) {
        for (auto& s : *set) {
            if (s.image.channels != cfg.channels) {
                throw ConfigError("sample '" + s.id + "' has " +
                                  std::to_string(s.image.channels) + " channel(s), config says " +
                                  std::to_string(cfg.channels));
            }
            if (cfg.dims == 2 && s.image.is_3d()) {
                throw ConfigError("sample '" + s.id + "' is a volume but config dims is 2");
            }
            if (!s.image.same_spatial_dims(s.mask)) {
                throw DimensionError("sample '" + s.id + "' image/mask dims differ");
            }
            normalize_minmax(s.image);
            binarize(s.mask);
        }
    }

    const LocalFeatureMap fmap = cfg.feature_map();
    calibrate_chain_scale(model, train, cfg);

    AdamState adam = AdamState::zeros(model.parameter_count());
    AdamOptions adam_opt;
    adam_opt.clip_norm = tcfg.clip_norm;

    Rng rng(tcfg.seed);
    FitResult result;
    result.best_val_dice = -1.0;

    // Best-so-far snapshot for restoring after early stopping.
    std::vector<DenseTensor> best_sites = model.sites;
    DenseTensor best_output = model.output;

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::int64_t stagnant = 0;

    for (std::int64_t epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        std::int64_t loss_elems = 0;

        for (std::size_t batch_start = 0; batch_start < order.size();
             batch_start += static_cast<std::size_t>(tcfg.batch_size)) {
            const std::size_t batch_end =
                std::min(order.size(), batch_start + static_cast<std::size_t>(tcfg.batch_size));

            std::vector<detail::PatchWork> patches;
            for (std::size_t bi = batch_start; bi < batch_end; ++bi) {
                const Sample& src = train[order[bi]];
                if (tcfg.augment) {
                    Sample aug = src;
                    if (rng.uniform() < 0.5) {
                        aug.image = flip_horizontal(aug.image);
                        aug.mask = flip_horizontal(aug.mask);
                    }
                    if (cfg.dims == 2 && rng.uniform() < 0.5) {
                        const int k = static_cast<int>(rng.uniform_int(1, 3));
                        aug.image = rotate90(aug.image, k);
                        aug.mask = rotate90(aug.mask, k);
                    }
                    detail::collect_patches(aug, cfg, fmap, patches);
                } else {
                    detail::collect_patches(src, cfg, fmap, patches);
                }
            }

            const std::int64_t n_patches = static_cast<std::int64_t>(patches.size());
            const std::int64_t p_dim = model.output_dim;
            std::vector<double> logits_all(static_cast<std::size_t>(n_patches * p_dim));
            std::vector<double> targets_all(static_cast<std::size_t>(n_patches * p_dim));
            std::vector<EnvironmentCache> envs(static_cast<std::size_t>(n_patches));

            detail::parallel_chunks(n_patches, tcfg.threads, [&](std::int64_t b, std::int64_t e,
                                                                 int) {
                for (std::int64_t p = b; p < e; ++p) {
                    auto& w = patches[static_cast<std::size_t>(p)];
                    envs[static_cast<std::size_t>(p)] = compute_environments(model, w.features);
                    const auto lg = forward_from_env(model, envs[static_cast<std::size_t>(p)]);
                    std::copy(lg.begin(), lg.end(),
                              logits_all.begin() + static_cast<std::ptrdiff_t>(p * p_dim));
                    std::copy(w.targets.begin(), w.targets.end(),
                              targets_all.begin() + static_cast<std::ptrdiff_t>(p * p_dim));
                }
            });

            const LossResult loss = compute_loss(tcfg.loss, logits_all, targets_all);
            loss_sum += loss.value * static_cast<double>(logits_all.size());
            loss_elems += static_cast<std::int64_t>(logits_all.size());

            // Sum of per-patch gradients == gradient of the joint batch
            // loss; per-thread accumulators merge in chunk order.
            const int chunks = std::max(1, std::min<int>(tcfg.threads,
                                                         static_cast<int>(n_patches)));
            std::vector<MpsGradients> partial;
            partial.reserve(static_cast<std::size_t>(chunks));
            for (int c = 0; c < chunks; ++c) partial.push_back(MpsGradients::zeros_like(model));
            detail::parallel_chunks(n_patches, tcfg.threads,
                                    [&](std::int64_t b, std::int64_t e, int chunk) {
                                        for (std::int64_t p = b; p < e; ++p) {
                                            auto& w = patches[static_cast<std::size_t>(p)];
                                            backward_accumulate(
                                                model, w.features,
                                                std::span<const double>(loss.grad)
                                                    .subspan(static_cast<std::size_t>(p * p_dim),
                                                             static_cast<std::size_t>(p_dim)),
                                                envs[static_cast<std::size_t>(p)],
                                                partial[static_cast<std::size_t>(chunk)]);
                                        }
                                    });
            for (int c = 1; c < chunks; ++c) partial[0].add(partial[static_cast<std::size_t>(c)]);

            try {
                adam_step(parameter_spans(model), gradient_spans(std::as_const(partial[0])), adam,
                          tcfg.lr, adam_opt);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                                   ", batch starting at image " + std::to_string(batch_start) +
                                   ")");
            }
        }

        // Validation pass: loss and Dice share one forward sweep per image.
        double val_loss_sum = 0.0;
        std::int64_t val_elems = 0;
        double val_dice_sum = 0.0;
        for (const auto& s : val) {
            const PatchGrid grid = make_patch_grid(s.image, cfg.patch_edge, cfg.dims);
            const auto pixel_seqs = ravel(s.image, grid);
            const auto target_seqs = ravel(s.mask, grid);
            const std::int64_t n_p = static_cast<std::int64_t>(pixel_seqs.size());
            std::vector<double> logits_all(static_cast<std::size_t>(n_p * model.output_dim));
            std::vector<double> targets_all(static_cast<std::size_t>(n_p * model.output_dim));
            std::vector<std::vector<double>> soft(pixel_seqs.size());
            detail::parallel_chunks(n_p, tcfg.threads, [&](std::int64_t b, std::int64_t e, int) {
                for (std::int64_t p = b; p < e; ++p) {
                    const auto feats =
                        patch_features(pixel_seqs[static_cast<std::size_t>(p)], fmap,
                                       cfg.channels);
                    auto lg = forward(model, feats);
                    std::copy(lg.begin(), lg.end(),
                              logits_all.begin() +
                                  static_cast<std::ptrdiff_t>(p * model.output_dim));
                    std::copy(target_seqs[static_cast<std::size_t>(p)].begin(),
                              target_seqs[static_cast<std::size_t>(p)].end(),
                              targets_all.begin() +
                                  static_cast<std::ptrdiff_t>(p * model.output_dim));
                    for (auto& z : lg) z = sigmoid(z);
                    soft[static_cast<std::size_t>(p)] = std::move(lg);
                }
            });
            const LossResult vloss = compute_loss(tcfg.loss, logits_all, targets_all);
            val_loss_sum += vloss.value * static_cast<double>(logits_all.size());
            val_elems += static_cast<std::int64_t>(logits_all.size());
            const Image soft_img = unravel(grid, soft, cfg.classes);
            val_dice_sum += dice(soft_img, s.mask);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(std::max<std::int64_t>(1, loss_elems));
        stats.val_loss = val_loss_sum / static_cast<double>(std::max<std::int64_t>(1, val_elems));
        stats.val_dice = val_dice_sum / static_cast<double>(val.size());
        stats.improved = stats.val_dice > result.best_val_dice;
        result.history.push_back(stats);
        result.epochs_run = epoch;

        if (stats.improved) {
            result.best_val_dice = stats.val_dice;
            result.best_epoch = epoch;
            best_sites = model.sites;
            best_output = model.output;
            stagnant = 0;
        } else {
            ++stagnant;
        }
        if (callback) callback(model, stats);
        if (stagnant >= tcfg.patience) break;
    }

    model.sites = std::move(best_sites);
    model.output = std::move(best_output);
    return result;
}

inline std::string history_csv(const std::vector<EpochStats>& history) {
    std::string out = "epoch,train_loss,val_loss,val_dice\n";
    char buf[128];
    for (const auto& h : history) {
        std::snprintf(buf, sizeof(buf), "%lld,%.10g,%.10g,%.10g\n",
                      static_cast<long long>(h.epoch), h.train_loss, h.val_loss, h.val_dice);
        out += buf;
    }
    return out;
}

}  // namespace tenseg
