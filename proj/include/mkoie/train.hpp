// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0
//
// Training pipeline: epoch/batch loop with task-pure batches, hybrid loss,
// Adam updates with global-norm clipping, stepped LR schedule, atomic
// checkpointing and an append-only metrics log.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "mkoie/checkpoint.hpp"
#include "mkoie/config.hpp"
#include "mkoie/dataset.hpp"
#include "mkoie/loss.hpp"
#include "mkoie/net.hpp"

namespace mkoie::train {

// lr0 * factor^(#drop epochs <= epoch); exact powers at the drop points.
double lr_at(int epoch, const TrainConfig& cfg);

// Adam with per-parameter step counts so that parameters outside the
// selected task's graph are never touched (bias correction stays aligned
// across checkpoint resume).
class Adam {
public:
    Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    // One update over named parameters; skips params without grads.
    // clip_norm <= 0 disables clipping.
    void step(const std::vector<std::pair<std::string, torch::Tensor>>& params,
              double lr, double clip_norm);

    std::map<std::string, torch::Tensor>& moments1() { return m_; }
    std::map<std::string, torch::Tensor>& moments2() { return v_; }
    std::map<std::string, std::int64_t>& step_counts() { return t_; }

private:
    double beta1_, beta2_, eps_;
    std::map<std::string, torch::Tensor> m_, v_;
    std::map<std::string, std::int64_t> t_;
};

struct StepRecord {
    std::int64_t step = 0;
    int epoch = 0;
    Task task = Task::Dehaze;
    double lr = 0;
    double rec = 0, per = 0, total = 0;
    double wall_ms = 0;

    std::string to_line() const; // tab-separated; wall_ms last
    static std::string header();
};

struct TaskMeans {
    std::array<double, 3> rec{}, per{}, total{};
    std::array<int, 3> batches{};
};

struct TrainState {
    net::Enhancer model{nullptr};
    ModelConfig model_config;
    Adam opt;
    std::int64_t epoch = 0;
    std::int64_t global_step = 0;
    std::mt19937_64 rng;
};

TrainState make_state(const ModelConfig& mc, std::uint64_t seed);

using StepSink = std::function<void(const StepRecord&)>;

// One pass over the dataset in task-pure batches. Throws RuntimeFailure with
// step/task/loss diagnostics if the loss goes non-finite.
TaskMeans train_epoch(TrainState& state, const data::PairedDataset& data,
                      const TrainConfig& cfg, loss::FeatureExtractor& fx,
                      const StepSink& sink = nullptr);

void save_checkpoint(const TrainState& state, const std::string& path);
TrainState load_checkpoint(const std::string& path);

// Appends records as tab-separated lines; creates the file with a header.
class MetricsLog {
public:
    explicit MetricsLog(const std::string& path);
    void append(const StepRecord& r);

private:
    std::string path_;
};

} // namespace mkoie::train
