// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0

#include "mkoie/degrade.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "mkoie/image_io.hpp"

namespace fs = std::filesystem;

namespace mkoie::degrade {

DepthMode parse_depth_mode(const std::string& s) {
    if (s == "ramp") return DepthMode::Ramp;
    if (s == "radial") return DepthMode::Radial;
    if (s == "fractal") return DepthMode::Fractal;
    throw ValidationError("unknown depth mode '" + s + "' (expected ramp, radial or fractal)");
}

void IlluminationSpec::validate() const {
    if (scale <= 0.0 || scale > 1.0) throw ValidationError("illumination scale must be in (0,1]");
    if (gamma < 1.0) throw ValidationError("illumination gamma must be >= 1");
    if (mode == IllumMode::Identity && (scale != 1.0 || gamma != 1.0)) {
        throw ValidationError("identity illumination requires scale=1 and gamma=1");
    }
}

std::string IlluminationSpec::serialize() const {
    const char* m = mode == IllumMode::Identity ? "identity"
                    : mode == IllumMode::GlobalScale ? "global_scale" : "gamma";
    std::ostringstream out;
    out << m << "," << scale << "," << gamma;
    return out.str();
}

void NoiseSpec::validate() const {
    if (sigma < 0.0) throw ValidationError("noise sigma must be >= 0");
}

std::string NoiseSpec::serialize() const {
    std::ostringstream out;
    out << (enabled ? 1 : 0) << "," << sigma;
    return out.str();
}

void DegradationParams::validate() const {
    if (!(beta > 0.0)) throw ValidationError("beta must be > 0");
    for (double a : atmos_light) {
        if (!(a > 0.0 && a <= 1.0)) throw ValidationError("atmospheric light channels must be in (0,1]");
    }
    illum.validate();
    noise.validate();
    if (task == Task::Dehaze) {
        if (!illum.is_identity()) throw ValidationError("dehaze task requires identity illumination");
        if (noise.enabled) throw ValidationError("dehaze task requires noise disabled");
    }
}

std::string DegradationParams::serialize() const {
    std::ostringstream out;
    out << "beta=" << beta << ";A=" << atmos_light[0] << "," << atmos_light[1] << ","
        << atmos_light[2] << ";illum=" << illum.serialize() << ";noise=" << noise.serialize()
        << ";task=" << task_name(task);
    return out.str();
}

DegradationParams DegradationParams::deserialize(const std::string& s) {
    DegradationParams p;
    std::istringstream in(s);
    std::string field;
    while (std::getline(in, field, ';')) {
        auto eq = field.find('=');
        if (eq == std::string::npos) throw ValidationError("bad params field: " + field);
        std::string key = field.substr(0, eq), val = field.substr(eq + 1);
        std::istringstream vs(val);
        std::string item;
        std::vector<std::string> parts;
        while (std::getline(vs, item, ',')) parts.push_back(item);
        if (key == "beta") {
            p.beta = std::stod(val);
        } else if (key == "A") {
            if (parts.size() != 3) throw ValidationError("bad A field: " + val);
            for (int i = 0; i < 3; ++i) p.atmos_light[i] = std::stod(parts[i]);
        } else if (key == "illum") {
            if (parts.size() != 3) throw ValidationError("bad illum field: " + val);
            p.illum.mode = parts[0] == "identity" ? IllumMode::Identity
                           : parts[0] == "global_scale" ? IllumMode::GlobalScale
                                                        : IllumMode::Gamma;
            p.illum.scale = std::stod(parts[1]);
            p.illum.gamma = std::stod(parts[2]);
        } else if (key == "noise") {
            if (parts.size() != 2) throw ValidationError("bad noise field: " + val);
            p.noise.enabled = parts[0] == "1";
            p.noise.sigma = std::stod(parts[1]);
        } else if (key == "task") {
            p.task = parse_task(val);
        } else {
            throw ValidationError("unknown params field: " + key);
        }
    }
    return p;
}

torch::Tensor transmission_map(const torch::Tensor& depth, double beta) {
    if (!(beta > 0.0)) throw ValidationError("beta must be > 0");
    if (!depth.isfinite().all().item<bool>()) {
        throw ValidationError("depth map contains non-finite entries");
    }
    if ((depth < 0).any().item<bool>()) {
        throw ValidationError("depth map contains negative entries");
    }
    return torch::exp(-beta * depth.to(torch::kFloat64));
}

torch::Tensor gaussian_field(int channels, int height, int width, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    auto uniform = [&gen]() {
        // (0,1]; avoids log(0) in Box-Muller
        return (static_cast<double>(gen() >> 11) + 1.0) * 0x1.0p-53;
    };
    auto t = torch::empty({channels, height, width}, torch::kFloat64);
    double* d = t.data_ptr<double>();
    const std::int64_t n = t.numel();
    for (std::int64_t i = 0; i < n; i += 2) {
        double u1 = uniform(), u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        d[i] = r * std::cos(2.0 * M_PI * u2);
        if (i + 1 < n) d[i + 1] = r * std::sin(2.0 * M_PI * u2);
    }
    return t;
}

torch::Tensor generate_depth(int height, int width, DepthMode mode,
                             std::uint64_t rng_seed, double d_max) {
    if (height < 1 || width < 1) throw ValidationError("depth dims must be >= 1");
    auto opts = torch::TensorOptions().dtype(torch::kFloat64);
    switch (mode) {
    case DepthMode::Ramp: {
        auto col = height > 1 ? torch::linspace(0.0, d_max, height, opts)
                              : torch::zeros({1}, opts);
        return col.unsqueeze(1).expand({height, width}).contiguous();
    }
    case DepthMode::Radial: {
        if (height == 1 && width == 1) return torch::zeros({1, 1}, opts);
        double cy = (height - 1) / 2.0, cx = (width - 1) / 2.0;
        auto ys = torch::arange(height, opts).unsqueeze(1) - cy;
        auto xs = torch::arange(width, opts).unsqueeze(0) - cx;
        auto r = torch::sqrt(ys * ys + xs * xs);
        double rmax = r.max().item<double>();
        return r * (d_max / rmax);
    }
    case DepthMode::Fractal: {
        if (height == 1 && width == 1) return torch::zeros({1, 1}, opts);
        // Value noise: sum of bilinearly upsampled random grids at octave
        // resolutions, then min-max normalized to [0, d_max].
        namespace F = torch::nn::functional;
        auto field = torch::zeros({height, width}, opts);
        double amp = 1.0;
        for (int octave = 0; octave < 4; ++octave) {
            int gh = std::max(2, (height >> (4 - octave)) + 2);
            int gw = std::max(2, (width >> (4 - octave)) + 2);
            auto grid = gaussian_field(1, gh, gw, mix_seed(rng_seed, 101 + octave));
            auto up = F::interpolate(grid.unsqueeze(0),
                                     F::InterpolateFuncOptions()
                                         .size(std::vector<std::int64_t>{height, width})
                                         .mode(torch::kBilinear)
                                         .align_corners(true))
                          .squeeze(0)
                          .squeeze(0);
            field += amp * up;
            amp *= 0.5;
        }
        double lo = field.min().item<double>(), hi = field.max().item<double>();
        if (hi - lo < 1e-12) return torch::zeros({height, width}, opts);
        return (field - lo) * (d_max / (hi - lo));
    }
    }
    throw ValidationError("unknown depth mode");
}

PairedSample synthesize(const torch::Tensor& clean, const torch::Tensor& depth,
                        const DegradationParams& params, std::uint64_t rng_seed) {
    params.validate();
    if (clean.dim() != 3 || clean.size(0) != 3) {
        throw ValidationError("synthesize expects a 3xHxW clean image");
    }
    if (depth.dim() != 2 || depth.size(0) != clean.size(1) || depth.size(1) != clean.size(2)) {
        throw ValidationError("depth map size must match the clean image");
    }
    auto j = clean.to(torch::kFloat64);

    // J' = L(J): global gamma then scale for the low-light component.
    torch::Tensor lit = j;
    switch (params.illum.mode) {
    case IllumMode::Identity: break;
    case IllumMode::GlobalScale: lit = params.illum.scale * j; break;
    case IllumMode::Gamma: lit = params.illum.scale * torch::pow(j, params.illum.gamma); break;
    }

    torch::Tensor degraded;
    if (params.task == Task::LowLight) {
        degraded = lit; // t == 1, haze term vanishes
    } else {
        auto t = transmission_map(depth, params.beta).unsqueeze(0); // 1xHxW
        auto a = torch::tensor({params.atmos_light[0], params.atmos_light[1],
                                params.atmos_light[2]},
                               torch::kFloat64)
                     .view({3, 1, 1});
        degraded = lit * t + a * (1.0 - t);
    }
    if (params.noise.enabled && params.noise.sigma > 0.0) {
        degraded = degraded + params.noise.sigma *
                                  gaussian_field(3, static_cast<int>(clean.size(1)),
                                                 static_cast<int>(clean.size(2)), rng_seed);
    }
    return {degraded.clamp(0.0, 1.0), j.clone(), params.task};
}

DegradationParams SamplerConfig::sample(Task task, std::uint64_t seed) const {
    std::mt19937_64 gen(seed);
    auto uni = [&gen](double lo, double hi) {
        double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    };
    DegradationParams p;
    p.task = task;
    p.beta = uni(beta_min, beta_max);
    switch (task) {
    case Task::Dehaze: {
        double a = uni(id_atmos_min, id_atmos_max);
        p.atmos_light = {a, a, a};
        p.illum = {};
        p.noise = {};
        break;
    }
    case Task::LowLight: {
        p.illum.mode = IllumMode::Gamma;
        p.illum.scale = uni(illum_scale_min, illum_scale_max);
        p.illum.gamma = uni(illum_gamma_min, illum_gamma_max);
        p.noise.enabled = true;
        p.noise.sigma = uni(sigma_min, sigma_max);
        break;
    }
    case Task::NightHaze: {
        double a = uni(nhie_atmos_min, nhie_atmos_max);
        for (int c = 0; c < 3; ++c) {
            double jit = uni(-nhie_atmos_jitter, nhie_atmos_jitter);
            p.atmos_light[c] = std::clamp(a + jit, 0.01, 1.0);
        }
        p.illum.mode = IllumMode::Gamma;
        p.illum.scale = uni(illum_scale_min, illum_scale_max);
        p.illum.gamma = uni(illum_gamma_min, illum_gamma_max);
        p.noise.enabled = true;
        p.noise.sigma = uni(sigma_min, sigma_max);
        break;
    }
    }
    return p;
}

DatasetManifest make_dataset(const std::vector<std::string>& clean_image_paths,
                             const DatasetConfig& cfg, std::uint64_t rng_seed) {
    if (clean_image_paths.empty()) throw ValidationError("no clean images given");
    if (cfg.patch <= 0) throw ValidationError("patch size must be > 0");
    if (cfg.tasks.empty()) throw ValidationError("no tasks requested");

    fs::create_directories(cfg.out_dir);
    for (Task t : cfg.tasks) {
        fs::create_directories(fs::path(cfg.out_dir) / task_name(t) / "degraded");
        fs::create_directories(fs::path(cfg.out_dir) / task_name(t) / "clean");
    }

    DatasetManifest manifest;
    std::ostringstream lines;
    lines << "# mkoie dataset manifest v1\n";
    lines << "# id\ttask\tsource\ty\tx\tparams\n";

    int sample_idx = 0;
    for (std::size_t img_i = 0; img_i < clean_image_paths.size(); ++img_i) {
        const std::string& src = clean_image_paths[img_i];
        auto loaded = img::load_png(src);
        const auto h = loaded.tensor.size(1), w = loaded.tensor.size(2);
        if (h < cfg.patch || w < cfg.patch) {
            manifest.skipped.push_back(src);
            lines << "# skipped\t" << src << "\tundersized " << h << "x" << w << "\n";
            continue;
        }

        std::vector<std::pair<std::int64_t, std::int64_t>> offsets;
        if (cfg.random_crops) {
            std::mt19937_64 gen(mix_seed(rng_seed, 7000 + img_i));
            for (int k = 0; k < cfg.crops_per_image; ++k) {
                std::int64_t y = h == cfg.patch ? 0 : static_cast<std::int64_t>(gen() % (h - cfg.patch + 1));
                std::int64_t x = w == cfg.patch ? 0 : static_cast<std::int64_t>(gen() % (w - cfg.patch + 1));
                offsets.emplace_back(y, x);
            }
        } else {
            for (std::int64_t y = 0; y + cfg.patch <= h; y += cfg.patch) {
                for (std::int64_t x = 0; x + cfg.patch <= w; x += cfg.patch) {
                    offsets.emplace_back(y, x);
                }
            }
        }

        for (auto [y, x] : offsets) {
            auto patch = loaded.tensor
                             .index({torch::indexing::Slice(),
                                     torch::indexing::Slice(y, y + cfg.patch),
                                     torch::indexing::Slice(x, x + cfg.patch)})
                             .contiguous();
            for (Task task : cfg.tasks) {
                std::uint64_t s = mix_seed(rng_seed, sample_idx);
                auto params = cfg.sampler.sample(task, mix_seed(s, 1));
                auto depth = generate_depth(cfg.patch, cfg.patch, cfg.depth_mode,
                                            mix_seed(s, 2), cfg.depth_max);
                auto pair = synthesize(patch, depth, params, mix_seed(s, 3));

                char id[32];
                std::snprintf(id, sizeof(id), "%06d", sample_idx);
                auto dir = fs::path(cfg.out_dir) / task_name(task);
                img::save_png(pair.degraded, (dir / "degraded" / (std::string(id) + ".png")).string());
                img::save_png(pair.clean, (dir / "clean" / (std::string(id) + ".png")).string());

                lines << id << "\t" << task_name(task) << "\t" << src << "\t" << y << "\t" << x
                      << "\t" << params.serialize() << "\n";
                ++manifest.counts_per_task[static_cast<int>(task) - 1];
                ++sample_idx;
            }
        }
    }
    for (Task t : cfg.tasks) {
        lines << "# count\t" << task_name(t) << "\t"
              << manifest.counts_per_task[static_cast<int>(t) - 1] << "\n";
    }

    manifest.path = (fs::path(cfg.out_dir) / "manifest.tsv").string();
    std::ofstream out(manifest.path, std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write manifest: " + manifest.path);
    out << lines.str();
    return manifest;
}

} // namespace mkoie::degrade
