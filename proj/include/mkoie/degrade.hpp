// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0
//
// Physics-based degradation synthesis: I = J * L * t + A * (1 - t) + N with
// t = exp(-beta * d). Produces paired (degraded, clean) patches for the three
// restoration tasks.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "mkoie/common.hpp"
#include "mkoie/config.hpp"

namespace mkoie::degrade {

enum class DepthMode { Ramp, Radial, Fractal };
DepthMode parse_depth_mode(const std::string& s);

enum class IllumMode { Identity, GlobalScale, Gamma };

struct IlluminationSpec {
    IllumMode mode = IllumMode::Identity;
    double scale = 1.0; // in (0,1]
    double gamma = 1.0; // >= 1

    bool is_identity() const { return mode == IllumMode::Identity; }
    void validate() const;
    std::string serialize() const;
};

struct NoiseSpec {
    bool enabled = false;
    double sigma = 0.0; // additive Gaussian std, intensity units

    void validate() const;
    std::string serialize() const;
};

struct DegradationParams {
    double beta = 1.0;                            // haze density
    std::array<double, 3> atmos_light = {1, 1, 1}; // per-channel A in (0,1]
    IlluminationSpec illum;
    NoiseSpec noise;
    Task task = Task::Dehaze;

    void validate() const;
    std::string serialize() const;
    static DegradationParams deserialize(const std::string& s);
};

struct PairedSample {
    torch::Tensor degraded; // 3xHxW double in [0,1]
    torch::Tensor clean;    // same shape
    Task task;
};

// t(p) = exp(-beta * d(p)). Rejects negative or non-finite depth.
torch::Tensor transmission_map(const torch::Tensor& depth, double beta);

// Procedural depth, normalized to [0, d_max]. Deterministic per seed.
torch::Tensor generate_depth(int height, int width, DepthMode mode,
                             std::uint64_t rng_seed, double d_max = 5.0);

// Deterministic standard-normal field (Box-Muller over splitmix-seeded
// mt19937_64); shared with the synthesis oracle in tests.
torch::Tensor gaussian_field(int channels, int height, int width, std::uint64_t seed);

// Applies the imaging model to a clean 3xHxW image. The clean tensor is
// returned unmodified; the degraded side is clipped to [0,1].
PairedSample synthesize(const torch::Tensor& clean, const torch::Tensor& depth,
                        const DegradationParams& params, std::uint64_t rng_seed);

// Sampling ranges for per-patch degradation parameters.
struct SamplerConfig {
    double beta_min = 0.1, beta_max = 0.5;
    double sigma_min = 0.005, sigma_max = 0.02;
    double illum_scale_min = 0.1, illum_scale_max = 0.5;
    double illum_gamma_min = 1.5, illum_gamma_max = 3.0;
    double id_atmos_min = 0.7, id_atmos_max = 1.0;    // equal channels
    double nhie_atmos_min = 0.2, nhie_atmos_max = 0.6; // + channel jitter
    double nhie_atmos_jitter = 0.05;

    DegradationParams sample(Task task, std::uint64_t seed) const;
};

struct DatasetConfig {
    std::string out_dir;
    int patch = 256;
    bool random_crops = false; // false: non-overlapping grid
    int crops_per_image = 5;   // random-crop mode only
    std::vector<Task> tasks = {Task::Dehaze, Task::LowLight, Task::NightHaze};
    DepthMode depth_mode = DepthMode::Fractal;
    double depth_max = 5.0;
    SamplerConfig sampler;
};

struct DatasetManifest {
    std::array<int, 3> counts_per_task = {0, 0, 0};
    std::vector<std::string> skipped; // undersized source images
    std::string path;                 // manifest file on disk

    int total() const { return counts_per_task[0] + counts_per_task[1] + counts_per_task[2]; }
};

// Writes <out>/<task>/{degraded,clean}/<id>.png pairs plus manifest.tsv.
// Deterministic for a fixed seed; undersized images are skipped and recorded.
DatasetManifest make_dataset(const std::vector<std::string>& clean_image_paths,
                             const DatasetConfig& cfg, std::uint64_t rng_seed);

} // namespace mkoie::degrade
