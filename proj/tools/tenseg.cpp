// Command-line front end: dataset generation, training, prediction, and
// evaluation for the strided MPS segmentation model.

#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tenseg/tenseg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

// "a.b.c=value" patches into nested JSON; values parse as JSON scalars
// first (numbers, booleans) and fall back to strings.
void apply_override(json& cfg, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw tenseg::ConfigError("override must look like key=value, got '" + spec + "'");
    }
    const std::string path = spec.substr(0, eq);
    const std::string raw = spec.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception&) {
        value = raw;
    }
    json* node = &cfg;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty()) throw tenseg::ConfigError("bad override path '" + path + "'");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            break;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

json load_config_json(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw tenseg::IoError("cannot open config " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw tenseg::ParseError("invalid JSON in " + path + ": " + e.what());
    }
    for (const auto& o : overrides) apply_override(j, o);
    return j;
}

int resolve_threads(int flag_value, int config_value) {
    if (flag_value > 0) return flag_value;
    if (config_value > 0) return config_value;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void check_data_dims(const tenseg::ModelConfig& cfg, const std::vector<tenseg::Sample>& samples) {
    for (const auto& s : samples) {
        if (cfg.dims == 2 && s.image.is_3d()) {
            throw tenseg::ConfigError("config dims=2 but sample '" + s.id + "' is a volume");
        }
        if (cfg.dims == 3 && !s.image.is_3d()) {
            throw tenseg::ConfigError("config dims=3 but sample '" + s.id + "' is a 2D image");
        }
        if (s.image.channels != cfg.channels) {
            throw tenseg::ConfigError("config channels=" + std::to_string(cfg.channels) +
                                      " but sample '" + s.id + "' has " +
                                      std::to_string(s.image.channels));
        }
    }
}

int cmd_gen_synth(const std::string& out_dir, std::int64_t n, std::int64_t size,
                  std::uint64_t seed, int dims) {
    const auto samples = tenseg::gen_synthetic(n, size, seed, dims);
    tenseg::save_dataset(out_dir, samples);
    std::cout << "wrote " << samples.size() << " image/mask pairs to " << out_dir << "\n";
    return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_path, const std::string& history_path,
              const std::vector<std::string>& overrides, int threads_flag) {
    const json cfg_json = load_config_json(config_path, overrides);
    tenseg::RunConfig rc = tenseg::run_config_from_json(cfg_json);
    rc.train.threads = resolve_threads(threads_flag, rc.train.threads);

    auto samples = tenseg::load_dataset(data_dir);
    check_data_dims(rc.model, samples);
    auto split = tenseg::split_dataset(std::move(samples), rc.split, rc.train.seed);
    std::cout << "dataset: " << split.train.size() << " train / " << split.val.size()
              << " val / " << split.test.size() << " test\n";

    tenseg::MpsModel model = rc.model.make_model(rc.train.seed);
    std::cout << "model: " << model.num_sites << " sites, bond " << model.bond_dim << ", "
              << model.parameter_count() << " parameters\n";

    const auto t0 = std::chrono::steady_clock::now();
    tenseg::FitResult res =
        tenseg::fit(model, rc.model, rc.train, split.train, split.val,
                    [&](const tenseg::MpsModel&, const tenseg::EpochStats& s) {
                        std::printf("epoch %3lld  train_loss %.6f  val_loss %.6f  val_dice %.4f%s\n",
                                    static_cast<long long>(s.epoch), s.train_loss, s.val_loss,
                                    s.val_dice, s.improved ? " *" : "");
                        std::fflush(stdout);
                    });
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("best val_dice %.4f at epoch %lld (%lld epochs, %.1fs)\n", res.best_val_dice,
                static_cast<long long>(res.best_epoch), static_cast<long long>(res.epochs_run),
                secs);

    json extra;
    extra["train"] = tenseg::to_json(rc.train);
    extra["split"] = rc.split;
    extra["best_val_dice"] = res.best_val_dice;
    extra["best_epoch"] = res.best_epoch;
    extra["epochs_run"] = res.epochs_run;
    tenseg::save_checkpoint(out_path, model, rc.model, extra);
    std::cout << "checkpoint written to " << out_path << "\n";

    if (!history_path.empty()) {
        std::ofstream h(history_path);
        if (!h) throw tenseg::IoError("cannot write history " + history_path);
        h << tenseg::history_csv(res.history);
    }
    return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& input_path,
                const std::string& output_path, const std::string& soft_path, int threads_flag) {
    const tenseg::Checkpoint ck = tenseg::load_checkpoint(model_path);
    const tenseg::Image img = tenseg::load_any_image(input_path);
    if (img.channels != ck.config.channels) {
        throw tenseg::ConfigError("checkpoint expects " + std::to_string(ck.config.channels) +
                                  " channel(s), input has " + std::to_string(img.channels));
    }
    if ((ck.config.dims == 2) == img.is_3d()) {
        throw tenseg::ConfigError("checkpoint dims=" + std::to_string(ck.config.dims) +
                                  " does not match the input image");
    }
    const int threads = resolve_threads(threads_flag, 0);
    const tenseg::Image soft = tenseg::predict_soft(ck.model, ck.config, img, threads);
    const tenseg::Mask mask = tenseg::threshold_mask(soft);
    if (img.is_3d()) {
        tenseg::save_volume(output_path, mask);
        if (!soft_path.empty()) tenseg::save_volume(soft_path, soft);
    } else {
        tenseg::save_pnm(output_path, mask);  // binary {0,255}
        if (!soft_path.empty()) tenseg::save_pnm(soft_path, soft, 65535);
    }
    std::cout << "wrote " << output_path << "\n";
    return kExitOk;
}

int cmd_eval(const std::string& model_path, const std::string& data_dir,
             const std::string& report_path, const std::string& split_sel, int threads_flag) {
    const tenseg::Checkpoint ck = tenseg::load_checkpoint(model_path);
    auto samples = tenseg::load_dataset(data_dir);
    check_data_dims(ck.config, samples);

    if (split_sel != "all") {
        if (!ck.metadata.contains("extra") || !ck.metadata["extra"].contains("split") ||
            !ck.metadata["extra"].contains("train")) {
            throw tenseg::ConfigError(
                "checkpoint carries no split metadata; --split " + split_sel + " unavailable");
        }
        const auto fractions = ck.metadata["extra"]["split"].get<std::vector<double>>();
        const auto seed = ck.metadata["extra"]["train"]["seed"].get<std::uint64_t>();
        auto split = tenseg::split_dataset(std::move(samples), fractions, seed);
        if (split_sel == "train") samples = std::move(split.train);
        else if (split_sel == "val") samples = std::move(split.val);
        else if (split_sel == "test") samples = std::move(split.test);
        else throw tenseg::ConfigError("--split must be all, train, val, or test");
    }

    const int threads = resolve_threads(threads_flag, 0);
    const tenseg::EvalReport report =
        tenseg::evaluate_dataset(ck.model, ck.config, samples, threads);
    std::ofstream out(report_path);
    if (!out) throw tenseg::IoError("cannot write report " + report_path);
    out << report.to_csv();
    std::printf("%zu images  mean dice %.4f (std %.4f)  prauc %.4f\n", report.dice_scores.size(),
                report.mean_dice, report.std_dice, report.prauc);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Strided tensor-network image segmentation"};
    app.require_subcommand(1);

    // gen-synth
    auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic blob dataset");
    std::string gen_out;
    std::int64_t gen_n = 200, gen_size = 64;
    std::uint64_t gen_seed = 42;
    int gen_dims = 2;
    gen->add_option("--out", gen_out, "Output dataset directory")->required();
    gen->add_option("--n", gen_n, "Number of samples");
    gen->add_option("--size", gen_size, "Image edge length");
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--dims", gen_dims, "2 for images, 3 for volumes")->check(CLI::IsMember({2, 3}));

    // train
    auto* train = app.add_subcommand("train", "Train a model");
    std::string train_config, train_data, train_out, train_history;
    std::vector<std::string> train_overrides;
    int train_threads = 0;
    train->add_option("--config", train_config, "JSON config file")->required();
    train->add_option("--data", train_data, "Dataset root directory")->required();
    train->add_option("--out", train_out, "Output checkpoint path")->required();
    train->add_option("--history", train_history, "Write per-epoch CSV here");
    train->add_option("--set", train_overrides, "Override a config key (key=value), repeatable");
    train->add_option("--threads", train_threads, "Worker threads (default: available cores)");

    // predict
    auto* predict = app.add_subcommand("predict", "Segment one image with a trained model");
    std::string pr_model, pr_input, pr_output, pr_soft;
    int pr_threads = 0;
    predict->add_option("--model", pr_model, "Checkpoint path")->required();
    predict->add_option("--input", pr_input, "Input image (.pgm/.ppm/.stv)")->required();
    predict->add_option("--output", pr_output, "Binary mask output path")->required();
    predict->add_option("--soft", pr_soft, "Also write soft predictions here");
    predict->add_option("--threads", pr_threads, "Worker threads (default: available cores)");

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a model on a dataset");
    std::string ev_model, ev_data, ev_report, ev_split = "all";
    int ev_threads = 0;
    eval->add_option("--model", ev_model, "Checkpoint path")->required();
    eval->add_option("--data", ev_data, "Dataset root directory")->required();
    eval->add_option("--report", ev_report, "Output CSV report path")->required();
    eval->add_option("--split", ev_split, "all, train, val, or test (uses checkpoint split)")
        ->check(CLI::IsMember({"all", "train", "val", "test"}));
    eval->add_option("--threads", ev_threads, "Worker threads (default: available cores)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_synth(gen_out, gen_n, gen_size, gen_seed, gen_dims);
        if (train->parsed())
            return cmd_train(train_config, train_data, train_out, train_history, train_overrides,
                             train_threads);
        if (predict->parsed()) return cmd_predict(pr_model, pr_input, pr_output, pr_soft, pr_threads);
        if (eval->parsed()) return cmd_eval(ev_model, ev_data, ev_report, ev_split, ev_threads);
    } catch (const tenseg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const tenseg::DimensionError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const tenseg::CapacityError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const tenseg::ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const tenseg::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitData;
    } catch (const tenseg::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
