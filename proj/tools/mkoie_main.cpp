// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line entry point: synth / train / enhance / eval subcommands.
// Exit codes: 0 success, 2 validation error, 3 runtime failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mkoie/common.hpp"
#include "mkoie/config.hpp"
#include "mkoie/dataset.hpp"
#include "mkoie/degrade.hpp"
#include "mkoie/image_io.hpp"
#include "mkoie/loss.hpp"
#include "mkoie/metrics.hpp"
#include "mkoie/net.hpp"
#include "mkoie/train.hpp"

namespace fs = std::filesystem;
using namespace mkoie;

namespace {

constexpr const char* kVersion = "mkoie 0.1.0";

std::string data_root_default() {
    const char* env = std::getenv("MKOIE_DATA_ROOT");
    return env ? env : ".";
}

// Written before any command output so interrupted runs are attributable.
void write_run_manifest(const std::string& out_dir, const KeyValueConfig& cfg,
                        std::uint64_t seed, const std::string& command) {
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "run_manifest.txt", std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write run manifest in " + out_dir);
    out << "# " << kVersion << "\n";
    out << "command=" << command << "\n";
    out << "seed=" << seed << "\n";
    out << cfg.dump();
}

std::vector<std::string> list_pngs(const std::string& dir) {
    if (!fs::is_directory(dir)) throw ValidationError("not a directory: " + dir);
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".png") out.push_back(e.path().string());
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) throw ValidationError("no PNG images found in " + dir);
    return out;
}

std::vector<Task> parse_tasks(const std::string& csv) {
    std::vector<Task> tasks;
    std::istringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) tasks.push_back(parse_task(item));
    }
    if (tasks.empty()) throw ValidationError("no tasks given");
    return tasks;
}

degrade::SamplerConfig sampler_from(const KeyValueConfig& cfg) {
    degrade::SamplerConfig s;
    s.beta_min = cfg.get_double("synth.beta_min", s.beta_min);
    s.beta_max = cfg.get_double("synth.beta_max", s.beta_max);
    s.sigma_min = cfg.get_double("synth.sigma_min", s.sigma_min);
    s.sigma_max = cfg.get_double("synth.sigma_max", s.sigma_max);
    s.illum_scale_min = cfg.get_double("synth.illum_scale_min", s.illum_scale_min);
    s.illum_scale_max = cfg.get_double("synth.illum_scale_max", s.illum_scale_max);
    s.illum_gamma_min = cfg.get_double("synth.illum_gamma_min", s.illum_gamma_min);
    s.illum_gamma_max = cfg.get_double("synth.illum_gamma_max", s.illum_gamma_max);
    return s;
}

loss::FeatureExtractor extractor_from(const KeyValueConfig& cfg) {
    auto profile = cfg.get("loss.extractor", "frozen-random");
    auto weights = cfg.get("loss.vgg_weights", "");
    return loss::FeatureExtractor(profile, weights);
}

int cmd_synth(const KeyValueConfig& cfg, std::uint64_t seed, const std::string& out_override) {
    auto clean_dir = cfg.get("synth.clean_dir", data_root_default());
    auto images = list_pngs(clean_dir);

    degrade::DatasetConfig dc;
    dc.out_dir = out_override.empty() ? cfg.require("synth.out") : out_override;
    dc.patch = cfg.get_int("synth.patch", dc.patch);
    auto mode = cfg.get("synth.mode", "grid");
    if (mode != "grid" && mode != "random") {
        throw ValidationError("synth.mode must be 'grid' or 'random'");
    }
    dc.random_crops = mode == "random";
    dc.crops_per_image = cfg.get_int("synth.crops_per_image", dc.crops_per_image);
    dc.tasks = parse_tasks(cfg.get("synth.tasks", "id,llie,nhie"));
    dc.depth_mode = degrade::parse_depth_mode(cfg.get("synth.depth_mode", "fractal"));
    dc.depth_max = cfg.get_double("synth.depth_max", dc.depth_max);
    dc.sampler = sampler_from(cfg);

    write_run_manifest(dc.out_dir, cfg, seed, "synth");
    auto manifest = degrade::make_dataset(images, dc, seed);
    std::cout << "wrote " << manifest.total() << " pairs (" << manifest.skipped.size()
              << " images skipped) -> " << manifest.path << "\n";
    return 0;
}

int cmd_train(const KeyValueConfig& cfg, std::uint64_t seed, const std::string& out_override,
              bool resume) {
    auto mc = model_config_from(cfg);
    auto tc = train_config_from(cfg);
    if (seed != 0) tc.seed = seed;
    auto out_dir = out_override.empty() ? cfg.require("train.out") : out_override;
    auto data_root = cfg.get("train.data", data_root_default());

    std::vector<Task> tasks = tc.task_mode == "single"
                                  ? std::vector<Task>{tc.task}
                                  : std::vector<Task>{Task::Dehaze, Task::LowLight, Task::NightHaze};
    auto data = data::load_dataset(data_root, tasks);
    if (data.size() == 0) throw ValidationError("dataset is empty: " + data_root);

    write_run_manifest(out_dir, cfg, tc.seed, "train");
    const auto ckpt_path = (fs::path(out_dir) / "checkpoint.bin").string();

    train::TrainState state;
    if (resume) {
        if (!fs::exists(ckpt_path)) throw ValidationError("no checkpoint to resume: " + ckpt_path);
        state = train::load_checkpoint(ckpt_path);
    } else {
        state = train::make_state(mc, tc.seed);
    }

    auto fx = extractor_from(cfg);
    train::MetricsLog log((fs::path(out_dir) / "metrics.tsv").string());

    while (state.epoch < tc.epochs) {
        auto means = train::train_epoch(state, data, tc, fx,
                                        [&log](const train::StepRecord& r) { log.append(r); });
        std::cout << "epoch " << state.epoch << "/" << tc.epochs;
        for (int t = 0; t < 3; ++t) {
            if (means.batches[t] > 0) {
                std::cout << "  " << task_name(task_from_int(t + 1)) << " total="
                          << means.total[t];
            }
        }
        std::cout << "\n";
        if (state.epoch % tc.checkpoint_every == 0 || state.epoch == tc.epochs) {
            train::save_checkpoint(state, ckpt_path);
        }
    }
    train::save_checkpoint(state, ckpt_path);
    std::cout << "checkpoint: " << ckpt_path << "\n";
    return 0;
}

int cmd_enhance(const std::string& ckpt_path, const std::vector<std::string>& inputs,
                const std::string& task_str, const std::string& out_dir) {
    Task task = parse_task(task_str);
    auto state = train::load_checkpoint(ckpt_path);
    state.model->eval();
    fs::create_directories(out_dir);
    const auto dtype = state.model_config.use_float32 ? torch::kFloat32 : torch::kFloat64;

    torch::NoGradGuard no_grad;
    for (const auto& in_path : inputs) {
        auto loaded = img::load_png(in_path);
        auto padded = img::pad_to_multiple(loaded.tensor.unsqueeze(0).to(dtype),
                                           state.model_config.divisibility());
        auto out = state.model->forward(padded.tensor, task);
        auto restored = img::crop_back(out, padded).squeeze(0);
        auto out_path = fs::path(out_dir) / fs::path(in_path).filename();
        img::save_png(restored, out_path.string(), loaded.bit_depth);
        std::cout << in_path << " -> " << out_path.string() << "\n";
    }
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_root,
             const std::string& tasks_csv, const std::string& out_csv) {
    auto tasks = parse_tasks(tasks_csv);
    auto state = train::load_checkpoint(ckpt_path);
    state.model->eval();
    auto data = data::load_dataset(data_root, tasks);
    auto report = metrics::evaluate(state.model, data, tasks);
    std::cout << report.to_table();
    if (!out_csv.empty()) {
        std::ofstream out(out_csv, std::ios::trunc);
        if (!out) throw RuntimeFailure("cannot write report: " + out_csv);
        out << report.to_csv();
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MKoIE multi-task image enhancer (dehazing, low-light, nighttime haze)"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path, out_dir, task_str = "nhie", ckpt_path, data_root, tasks_csv = "id,llie,nhie";
    std::string report_csv;
    std::uint64_t seed = 0;
    bool resume = false;
    std::vector<std::string> inputs;

    auto* synth = app.add_subcommand("synth", "synthesize a paired training dataset");
    synth->add_option("--config", config_path, "key=value config file")->required();
    synth->add_option("--seed", seed, "RNG seed override");
    synth->add_option("--out", out_dir, "output dataset directory");

    auto* train_cmd = app.add_subcommand("train", "train the enhancer");
    train_cmd->add_option("--config", config_path, "key=value config file")->required();
    train_cmd->add_option("--seed", seed, "RNG seed override");
    train_cmd->add_option("--out", out_dir, "run output directory");
    train_cmd->add_flag("--resume", resume, "resume from the last checkpoint");

    auto* enhance = app.add_subcommand("enhance", "restore degraded images");
    enhance->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
    enhance->add_option("--task", task_str, "id, llie or nhie")->required();
    enhance->add_option("--out", out_dir, "output directory")->required();
    enhance->add_option("images", inputs, "input PNG images")->required();

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    eval_cmd->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
    eval_cmd->add_option("--data", data_root, "dataset root")->required();
    eval_cmd->add_option("--tasks", tasks_csv, "comma-separated task list");
    eval_cmd->add_option("--out", report_csv, "CSV report path");

    CLI11_PARSE(app, argc, argv);

    try {
        KeyValueConfig cfg;
        if (!config_path.empty()) cfg = KeyValueConfig::from_file(config_path);
        if (seed != 0) cfg.set("seed", std::to_string(seed));
        std::uint64_t eff_seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));

        if (synth->parsed()) return cmd_synth(cfg, eff_seed, out_dir);
        if (train_cmd->parsed()) return cmd_train(cfg, eff_seed, out_dir, resume);
        if (enhance->parsed()) return cmd_enhance(ckpt_path, inputs, task_str, out_dir);
        if (eval_cmd->parsed()) return cmd_eval(ckpt_path, data_root, tasks_csv, report_csv);
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
