// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Heavier end-to-end checks (training runs) live here
// rather than in the unit tests.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "tenseg/tenseg.hpp"

using namespace tenseg;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int id;
    std::string label;
    std::function<std::string()> run;  // returns detail text; throws on failure
};

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw CheckFailure(what);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* pattern, ...) {
    char buf[512];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buf, sizeof(buf), pattern, args);
    va_end(args);
    return std::string(buf);
}

// ---- criterion 1: forward vs explicit contraction oracle ----------------

std::vector<double> explicit_forward(const MpsModel& m, const std::vector<double>& feats) {
    const DenseTensor theta = materialize(m);
    std::vector<DenseTensor> locals;
    for (std::int64_t j = 0; j < m.num_sites; ++j) {
        std::vector<double> v(feats.begin() + j * m.feature_dim,
                              feats.begin() + (j + 1) * m.feature_dim);
        locals.emplace_back(std::vector<std::int64_t>{m.feature_dim}, std::move(v));
    }
    const DenseTensor phi = outer_product_chain(locals);
    std::vector<double> logits(static_cast<std::size_t>(m.output_dim), 0.0);
    for (std::int64_t flat = 0; flat < phi.size(); ++flat) {
        for (std::int64_t mm = 0; mm < m.output_dim; ++mm) {
            logits[static_cast<std::size_t>(mm)] += theta[flat * m.output_dim + mm] * phi[flat];
        }
    }
    return logits;
}

std::string criterion_oracle_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::int64_t betas[] = {1, 2, 4};
    double worst = 0.0;
    int cases = 0;
    Rng rng(9001);
    while (cases < 50) {
        const std::int64_t n = 1 + (cases % 6);
        const std::int64_t beta = betas[cases % 3];
        const MpsModel m = make_mps(n, 2, n, beta, 7000 + static_cast<std::uint64_t>(cases));
        std::vector<double> feats(static_cast<std::size_t>(n * 2));
        for (auto& v : feats) v = rng.uniform(-1.0, 1.0);
        const auto fast = forward(m, feats);
        const auto slow = explicit_forward(m, feats);
        double scale = 1e-30;
        for (double v : slow) scale = std::max(scale, std::abs(v));
        for (std::size_t i = 0; i < fast.size(); ++i) {
            worst = std::max(worst, std::abs(fast[i] - slow[i]) / scale);
        }
        ++cases;
    }
    const double secs = seconds_since(t0);
    require(worst <= 1e-10, fmt("max relative error %.3e > 1e-10", worst));
    require(secs < 10.0, fmt("runtime %.1fs >= 10s", secs));
    return fmt("50 configs, max rel err %.2e, %.2fs", worst, secs);
}

// ---- criterion 2: analytic gradients vs finite differences --------------

std::string criterion_gradient_correctness() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (int c = 0; c < 20; ++c) {
        const std::int64_t n = 2 + (c % 7);           // 2..8
        const std::int64_t beta = 1 + (c % 4);        // 1..4
        MpsModel m = make_mps(n, 2, n, beta, 500 + static_cast<std::uint64_t>(c));
        Rng rng(600 + static_cast<std::uint64_t>(c));
        std::vector<double> feats(static_cast<std::size_t>(n * 2));
        for (auto& v : feats) v = rng.uniform(-1.0, 1.0);
        std::vector<double> upstream(static_cast<std::size_t>(m.output_dim));
        for (auto& u : upstream) u = rng.uniform(-1.0, 1.0);

        const MpsGradients grads = backward(m, feats, upstream);
        auto scalar = [&] {
            const auto lg = forward(m, feats);
            double s = 0;
            for (std::size_t i = 0; i < lg.size(); ++i) s += upstream[i] * lg[i];
            return s;
        };
        const double h = 1e-5;
        auto spans = parameter_spans(m);
        const auto gspans = gradient_spans(grads);
        for (std::size_t s = 0; s < spans.size(); ++s) {
            for (std::size_t k = 0; k < spans[s].size(); ++k) {
                const double orig = spans[s][k];
                spans[s][k] = orig + h;
                const double hi = scalar();
                spans[s][k] = orig - h;
                const double lo = scalar();
                spans[s][k] = orig;
                const double fd = (hi - lo) / (2 * h);
                const double an = gspans[s][k];
                const double denom = std::max({1e-8, std::abs(fd), std::abs(an)});
                worst = std::max(worst, std::abs(fd - an) / denom);
            }
        }
    }
    const double secs = seconds_since(t0);
    require(worst <= 1e-4, fmt("max relative error %.3e > 1e-4", worst));
    require(secs < 30.0, fmt("runtime %.1fs >= 30s", secs));
    return fmt("20 configs, max rel err %.2e, %.2fs", worst, secs);
}

// ---- criterion 3: feature-map normalization ------------------------------

std::string criterion_feature_norm() {
    double worst = 0.0;
    Rng rng(3);
    for (std::int64_t d : {2, 3, 4, 8, 16}) {
        const LocalFeatureMap f(FeatureMapKind::BinomialSinusoidal, d);
        for (int k = 0; k < 1000; ++k) {
            const double x = rng.uniform();
            double sq = 0;
            for (double v : f.apply(x)) sq += v * v;
            worst = std::max(worst, std::abs(sq - 1.0));
        }
    }
    require(worst <= 1e-12, fmt("max |norm^2 - 1| = %.3e > 1e-12", worst));
    return fmt("d in {2,3,4,8,16}, 1000 x each, max dev %.2e", worst);
}

// ---- criterion 4: parameter counts vs the published table ---------------

std::string criterion_param_counts() {
    const std::int64_t lung = param_count(32, 1, 1, 4, 20, 2);
    const std::int64_t monuseg = param_count(8, 1, 1, 4, 4, 2);
    // Shape ledger: 2 edge sites (C d beta) + 1022 interior (beta^2 C d)
    // + central output tensor (beta^2 K^2) = 2,044,960.
    require(lung == 2044960, fmt("lung config count %lld != 2044960", (long long)lung));
    require(std::abs(static_cast<double>(lung) - 2.0e6) / 2.0e6 <= 0.03,
            "lung count not within 3% of 2.0M");
    require(monuseg == 5024, fmt("monuseg config count %lld != 5024", (long long)monuseg));
    require(std::abs(static_cast<double>(monuseg) - 5.1e3) / 5.1e3 <= 0.03,
            "monuseg count not within 3% of 5.1K");
    return fmt("lung %lld (2.0M +%.1f%%), monuseg %lld (5.1K %.1f%%)", (long long)lung,
               100.0 * (lung / 2.0e6 - 1.0), (long long)monuseg,
               100.0 * (monuseg / 5.1e3 - 1.0));
}

// ---- criterion 5: desk-scale training reproduction ----------------------

// Fraction of ground-truth-mixed patches whose thresholded prediction is a
// single class. Early training predicts at the patch level (high fraction);
// a converged model resolves boundaries inside patches (low fraction).
double uniform_fraction_on_mixed_patches(const MpsModel& model, const ModelConfig& cfg,
                                         const std::vector<Sample>& samples) {
    std::int64_t mixed = 0, uniform_pred = 0;
    for (const auto& s : samples) {
        const Image soft = predict_soft(model, cfg, s.image);
        const PatchGrid grid = make_patch_grid(s.image, cfg.patch_edge, cfg.dims);
        const auto gt_patches = ravel(s.mask, grid);
        const auto pred_patches = ravel(soft, grid);
        for (std::size_t p = 0; p < gt_patches.size(); ++p) {
            bool gt_has0 = false, gt_has1 = false;
            for (double v : gt_patches[p]) (v >= 0.5 ? gt_has1 : gt_has0) = true;
            if (!(gt_has0 && gt_has1)) continue;
            ++mixed;
            bool pred_has0 = false, pred_has1 = false;
            for (double v : pred_patches[p]) (v >= 0.5 ? pred_has1 : pred_has0) = true;
            if (!(pred_has0 && pred_has1)) ++uniform_pred;
        }
    }
    return mixed == 0 ? 0.0 : static_cast<double>(uniform_pred) / static_cast<double>(mixed);
}

std::string criterion_training_reproduction() {
    const auto t0 = std::chrono::steady_clock::now();
    auto samples = gen_synthetic(200, 64, 42);
    auto split = split_dataset(std::move(samples), {0.6, 0.2, 0.2}, 42);

    ModelConfig mcfg;
    mcfg.patch_edge = 8;
    mcfg.bond_dim = 8;
    mcfg.fm_kind = FeatureMapKind::BinomialSinusoidal;
    mcfg.fm_dim = 4;

    TrainConfig tcfg;
    tcfg.lr = 5e-4;
    tcfg.batch_size = 4;
    tcfg.max_epochs = 100;
    tcfg.patience = 100;
    tcfg.loss = LossKind::CrossEntropy;
    tcfg.seed = 42;
    tcfg.threads = 1;

    MpsModel model = mcfg.make_model(tcfg.seed);
    double epoch1_uniform = -1.0;
    bool finite_throughout = true;
    const FitResult res = fit(model, mcfg, tcfg, split.train, split.val,
                              [&](const MpsModel& live, const EpochStats& stats) {
                                  if (!all_finite(live)) finite_throughout = false;
                                  if (stats.epoch == 1) {
                                      epoch1_uniform = uniform_fraction_on_mixed_patches(
                                          live, mcfg, split.val);
                                  }
                              });

    const EvalReport test_report = evaluate_dataset(model, mcfg, split.test);
    const double final_uniform = uniform_fraction_on_mixed_patches(model, mcfg, split.val);
    const double secs = seconds_since(t0);

    require(finite_throughout, "parameters went non-finite during training");
    require(res.best_val_dice >= 0.90,
            fmt("best val dice %.4f < 0.90 (epoch %lld)", res.best_val_dice,
                (long long)res.best_epoch));
    require(test_report.mean_dice >= 0.88, fmt("test dice %.4f < 0.88", test_report.mean_dice));
    require(res.history.back().train_loss < res.history.front().train_loss,
            "final train loss not below initial");
    require(res.history.size() >= 5 && res.history[4].train_loss < res.history[0].train_loss,
            "train loss did not decrease over the first 5 epochs");
    require(epoch1_uniform >= 0.5,
            fmt("epoch-1 uniform fraction %.2f < 0.5 on mixed patches", epoch1_uniform));
    require(final_uniform < 0.5, fmt("final uniform fraction %.2f >= 0.5", final_uniform));
    require(secs <= 900.0, fmt("runtime %.0fs > 15min", secs));
    return fmt("val dice %.3f, test dice %.3f, prauc %.3f, uniform %.2f->%.2f, %lld epochs, %.0fs",
               res.best_val_dice, test_report.mean_dice, test_report.prauc, epoch1_uniform,
               final_uniform, (long long)res.epochs_run, secs);
}

// ---- criterion 6: patch locality through the full pipeline --------------

std::string criterion_patch_locality() {
    ModelConfig mcfg;
    mcfg.patch_edge = 4;
    mcfg.bond_dim = 4;
    MpsModel model = mcfg.make_model(616);

    Rng rng(617);
    Image img = Image::plane(16, 16);
    for (auto& v : img.data) v = rng.uniform(0.1, 0.9);
    // Pin the image range inside patch (1,1) so per-image normalization is
    // unaffected by outside perturbations.
    img.at(0, 4, 4) = 0.0;
    img.at(0, 4, 5) = 1.0;

    const Image base = predict_soft(model, mcfg, img);

    Image perturbed = img;
    for (std::int64_t y = 0; y < 16; ++y)
        for (std::int64_t x = 0; x < 16; ++x) {
            const bool inside = y >= 4 && y < 8 && x >= 4 && x < 8;
            if (!inside) perturbed.at(0, y, x) = rng.uniform(0.1, 0.9);
        }
    const Image moved = predict_soft(model, mcfg, perturbed);

    std::int64_t changed_outside = 0;
    for (std::int64_t y = 0; y < 16; ++y)
        for (std::int64_t x = 0; x < 16; ++x) {
            const bool inside = y >= 4 && y < 8 && x >= 4 && x < 8;
            if (inside) {
                require(base.at(0, y, x) == moved.at(0, y, x),
                        fmt("patch pixel (%lld,%lld) changed", (long long)y, (long long)x));
            } else if (base.at(0, y, x) != moved.at(0, y, x)) {
                ++changed_outside;
            }
        }
    require(changed_outside > 0, "perturbation had no effect anywhere (degenerate test)");
    return fmt("16 in-patch pixels bit-identical; %lld outside pixels moved",
               (long long)changed_outside);
}

// ---- criterion 7: byte-identical checkpoints ------------------------------

std::string criterion_determinism() {
    const fs::path dir = fs::temp_directory_path() / "tenseg_acceptance_det";
    fs::create_directories(dir);
    auto samples = gen_synthetic(30, 32, 4242);
    auto split = split_dataset(std::move(samples), {0.6, 0.2, 0.2}, 4242);

    ModelConfig mcfg;
    mcfg.patch_edge = 4;
    mcfg.bond_dim = 4;
    TrainConfig tcfg;
    tcfg.max_epochs = 10;
    tcfg.patience = 10;
    tcfg.seed = 4242;
    tcfg.threads = 1;
    tcfg.deterministic = true;

    std::string bytes[2];
    for (int run = 0; run < 2; ++run) {
        MpsModel model = mcfg.make_model(tcfg.seed);
        FitResult res = fit(model, mcfg, tcfg, split.train, split.val);
        nlohmann::json extra;
        extra["train"] = to_json(tcfg);
        extra["best_val_dice"] = res.best_val_dice;
        const fs::path p = dir / ("run" + std::to_string(run) + ".stnt");
        save_checkpoint(p, model, mcfg, extra);
        std::ifstream in(p, std::ios::binary);
        bytes[run].assign((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
    }
    require(!bytes[0].empty(), "empty checkpoint");
    require(bytes[0] == bytes[1], "checkpoints differ between identical runs");
    return fmt("two runs, %zu identical bytes", bytes[0].size());
}

// ---- criterion 8: metric oracles -----------------------------------------

double prauc_bruteforce(const std::vector<double>& scores, const std::vector<double>& labels) {
    std::vector<double> thresholds = scores;
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    std::int64_t total_pos = 0;
    for (double l : labels) total_pos += l >= 0.5;
    double ap = 0.0, prev_recall = 0.0;
    for (double thr : thresholds) {
        std::int64_t tp = 0, fp = 0;
        for (std::size_t i = 0; i < scores.size(); ++i)
            if (scores[i] >= thr) (labels[i] >= 0.5 ? tp : fp) += 1;
        const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

std::string criterion_metric_oracles() {
    Rng rng(808);
    std::vector<double> scores(1000), labels(1000);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = std::floor(rng.uniform() * 64.0) / 64.0;  // ties
        labels[i] = rng.uniform() < 0.25 ? 1.0 : 0.0;
    }
    labels[17] = 1.0;
    require(prauc(scores, labels) == prauc_bruteforce(scores, labels),
            "prauc != brute-force sweep (tied scores)");
    for (auto& s : scores) s = rng.uniform();
    require(prauc(scores, labels) == prauc_bruteforce(scores, labels),
            "prauc != brute-force sweep (continuous scores)");

    std::vector<double> same{1, 0, 1};
    require(dice(same, same) == 1.0, "dice identity != 1");
    std::vector<double> a{1, 1, 0, 0}, b{0, 0, 1, 1};
    require(dice(a, b) == 0.0, "dice disjoint != 0");
    std::vector<double> p{1, 1, 0}, g{1, 0, 0};
    require(dice(p, g) == 2.0 / 3.0, "dice 2/3 case mismatch");
    return "prauc == brute force on 1000 pts (x2); dice 1.0/0.0/(2/3) exact";
}

// ---- criterion 9: 3D path smoke test --------------------------------------

std::string criterion_3d_smoke() {
    const auto t0 = std::chrono::steady_clock::now();
    auto samples = gen_synthetic(60, 32, 42, 3);
    auto split = split_dataset(std::move(samples), {0.6, 0.2, 0.2}, 42);

    ModelConfig mcfg;
    mcfg.dims = 3;
    mcfg.patch_edge = 4;
    mcfg.bond_dim = 4;
    mcfg.fm_dim = 4;

    TrainConfig tcfg;
    tcfg.max_epochs = 50;
    tcfg.patience = 50;
    tcfg.seed = 42;
    tcfg.threads = 1;

    MpsModel model = mcfg.make_model(tcfg.seed);
    const FitResult res = fit(model, mcfg, tcfg, split.train, split.val);
    require(all_finite(model), "non-finite parameters after 3D training");
    const EvalReport report = evaluate_dataset(model, mcfg, split.test);
    const double secs = seconds_since(t0);
    require(report.mean_dice >= 0.75, fmt("3D test dice %.4f < 0.75", report.mean_dice));
    return fmt("val dice %.3f, test dice %.3f, %lld epochs, %.0fs", res.best_val_dice,
               report.mean_dice, (long long)res.epochs_run, secs);
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "oracle equivalence (forward vs explicit contraction)", criterion_oracle_equivalence},
        {2, "gradient correctness (backward vs finite differences)", criterion_gradient_correctness},
        {3, "feature-map normalization", criterion_feature_norm},
        {4, "parameter-count cross-check", criterion_param_counts},
        {5, "desk-scale training reproduction", criterion_training_reproduction},
        {6, "patch locality", criterion_patch_locality},
        {7, "determinism (byte-identical checkpoints)", criterion_determinism},
        {8, "metric oracles", criterion_metric_oracles},
        {9, "3D path smoke test", criterion_3d_smoke},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        std::string detail;
        bool pass = false;
        try {
            detail = c.run();
            pass = true;
        } catch (const std::exception& e) {
            detail = e.what();
        }
        std::printf("[%s] criterion %d: %s - %s\n", pass ? "PASS" : "FAIL", c.id, c.label.c_str(),
                    detail.c_str());
        std::fflush(stdout);
        if (!pass) ++failures;
    }
    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
