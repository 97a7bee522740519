// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0
//
// Hybrid objective: reconstruction (L1 + Charbonnier) plus multi-layer
// perceptual distance, combined as 0.8 * rec + 0.2 * per.

#pragma once

#include <string>
#include <vector>

#include <torch/torch.h>

#include "mkoie/common.hpp"

namespace mkoie::loss {

inline constexpr double kCharbonnierEps = 1e-6;
inline constexpr double kRecWeight = 0.8;
inline constexpr double kPerWeight = 0.2;

struct LossBreakdown {
    torch::Tensor rec;   // scalar
    torch::Tensor per;   // scalar
    torch::Tensor total; // scalar
    double w_rec = kRecWeight;
    double w_per = kPerWeight;
};

// mean(0.5*|d| + 0.5*sqrt(d^2 + 1e-6)); floor 0.5*sqrt(eps) at d = 0.
torch::Tensor reconstruction_loss(const torch::Tensor& i_re, const torch::Tensor& i_gt);

// Frozen feature extractor with three taps (second conv of stage 1 and 2,
// third conv of stage 3, post-activation). Two profiles:
//   "vgg16"         : widths 64/128/256, weights loaded from a checkpoint
//                     file, ImageNet input normalization;
//   "frozen-random" : same topology at widths 8/16/32, fixed-seed random
//                     weights, 0.5/0.5 normalization. Runs offline.
struct FeatureExtractorImpl : torch::nn::Module {
    static constexpr int kTaps = 3;

    // profile "frozen-random" (weights_path ignored) or "vgg16".
    FeatureExtractorImpl(const std::string& profile, const std::string& weights_path,
                         std::uint64_t seed = 5);
    std::vector<torch::Tensor> forward(const torch::Tensor& image);

    std::vector<torch::nn::Conv2d> convs;
    std::vector<int> tap_after; // conv indices producing taps
    torch::Tensor mean, std;
    std::string profile;
};
TORCH_MODULE(FeatureExtractor);

// (1/N) sum_i mean((phi_i(i_re) - phi_i(i_gt))^2); gradients flow to i_re
// only; extractor weights are frozen.
torch::Tensor perceptual_loss(const torch::Tensor& i_re, const torch::Tensor& i_gt,
                              FeatureExtractor& fx);

LossBreakdown total_loss(const torch::Tensor& i_re, const torch::Tensor& i_gt,
                         FeatureExtractor& fx,
                         double w_rec = kRecWeight, double w_per = kPerWeight);

} // namespace mkoie::loss
