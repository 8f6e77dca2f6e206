// Minimal end-to-end library usage: generate a tiny synthetic dataset in
// memory, train a small model for a few epochs, and report test Dice.
// Build and run:  ./demo_blob_training

#include <cstdio>

#include "tenseg/tenseg.hpp"

int main() {
    using namespace tenseg;

    auto samples = gen_synthetic(/*n=*/48, /*size=*/32, /*seed=*/7);
    auto split = split_dataset(std::move(samples), {0.5, 0.25, 0.25}, /*seed=*/7);

    ModelConfig mcfg;
    mcfg.patch_edge = 4;
    mcfg.bond_dim = 4;
    mcfg.fm_kind = FeatureMapKind::BinomialSinusoidal;
    mcfg.fm_dim = 4;

    TrainConfig tcfg;
    tcfg.max_epochs = 20;
    tcfg.patience = 20;
    tcfg.seed = 7;

    MpsModel model = mcfg.make_model(tcfg.seed);
    std::printf("training %lld parameters on %zu images\n",
                static_cast<long long>(model.parameter_count()), split.train.size());

    FitResult res = fit(model, mcfg, tcfg, split.train, split.val,
                        [](const MpsModel&, const EpochStats& s) {
                            std::printf("epoch %2lld  train %.4f  val %.4f  dice %.3f\n",
                                        static_cast<long long>(s.epoch), s.train_loss, s.val_loss,
                                        s.val_dice);
                        });

    const EvalReport report = evaluate_dataset(model, mcfg, split.test);
    std::printf("best val dice %.3f (epoch %lld); test dice %.3f, prauc %.3f\n",
                res.best_val_dice, static_cast<long long>(res.best_epoch), report.mean_dice,
                report.prauc);
    return 0;
}
