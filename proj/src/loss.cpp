// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0

#include "mkoie/loss.hpp"

#include "mkoie/checkpoint.hpp"

namespace F = torch::nn::functional;

namespace mkoie::loss {

torch::Tensor reconstruction_loss(const torch::Tensor& i_re, const torch::Tensor& i_gt) {
    if (!i_re.sizes().equals(i_gt.sizes())) {
        throw ValidationError("reconstruction loss: shape mismatch");
    }
    auto d = i_re - i_gt;
    return (0.5 * d.abs() + 0.5 * torch::sqrt(d * d + kCharbonnierEps)).mean();
}

FeatureExtractorImpl::FeatureExtractorImpl(const std::string& profile_,
                                           const std::string& weights_path,
                                           std::uint64_t seed)
    : profile(profile_) {
    std::vector<int> widths;
    if (profile == "vgg16") {
        widths = {64, 64, 128, 128, 256, 256, 256};
        mean = torch::tensor({0.485, 0.456, 0.406}, torch::kFloat64).view({1, 3, 1, 1});
        std = torch::tensor({0.229, 0.224, 0.225}, torch::kFloat64).view({1, 3, 1, 1});
    } else if (profile == "frozen-random") {
        widths = {8, 8, 16, 16, 32, 32, 32};
        mean = torch::full({1, 3, 1, 1}, 0.5, torch::kFloat64);
        std = torch::full({1, 3, 1, 1}, 0.5, torch::kFloat64);
    } else {
        throw ValidationError("unknown extractor profile '" + profile + "'");
    }
    // Stage layout mirrors the first three VGG-16 stages: two convs, pool,
    // two convs, pool, three convs. Taps after convs 1, 3 and 6 (post-ReLU).
    tap_after = {1, 3, 6};
    int in_ch = 3;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        auto conv = torch::nn::Conv2d(torch::nn::Conv2dOptions(in_ch, widths[i], 3).padding(1));
        convs.push_back(register_module("conv" + std::to_string(i), conv));
        in_ch = widths[i];
    }
    to(torch::kFloat64);
    if (profile == "vgg16") {
        if (weights_path.empty()) {
            throw ValidationError("vgg16 extractor profile requires a weights file");
        }
        auto ck = ckpt::load(weights_path);
        torch::NoGradGuard no_grad;
        for (auto& p : named_parameters()) {
            auto it = ck.arrays.find(p.key());
            if (it == ck.arrays.end()) {
                throw ckpt::ShapeError("extractor weights missing array: " + p.key());
            }
            if (!it->second.sizes().equals(p.value().sizes())) {
                throw ckpt::ShapeError("extractor weights shape mismatch for " + p.key());
            }
            p.value().copy_(it->second.to(torch::kFloat64));
        }
    } else {
        torch::manual_seed(seed);
        torch::NoGradGuard no_grad;
        for (auto& p : named_parameters()) {
            if (p.key().ends_with(".weight")) {
                torch::nn::init::kaiming_normal_(p.value());
            } else {
                p.value().zero_();
            }
        }
    }
    for (auto& p : parameters()) p.set_requires_grad(false);
}

std::vector<torch::Tensor> FeatureExtractorImpl::forward(const torch::Tensor& image) {
    auto x = (image.to(torch::kFloat64) - mean) / std;
    std::vector<torch::Tensor> taps;
    // pools sit after convs 1 and 3 (end of stages 1 and 2)
    for (std::size_t i = 0; i < convs.size(); ++i) {
        x = torch::relu(convs[i](x));
        if (std::find(tap_after.begin(), tap_after.end(), static_cast<int>(i)) != tap_after.end()) {
            taps.push_back(x);
        }
        if (i == 1 || i == 3) {
            x = F::max_pool2d(x, F::MaxPool2dFuncOptions(2));
        }
    }
    return taps;
}

torch::Tensor perceptual_loss(const torch::Tensor& i_re, const torch::Tensor& i_gt,
                              FeatureExtractor& fx) {
    if (!i_re.sizes().equals(i_gt.sizes())) {
        throw ValidationError("perceptual loss: shape mismatch");
    }
    auto f_re = fx->forward(i_re);
    // Target features carry no graph (frozen extractor, detached target); run
    // them in the same grad mode as the prediction pass so both sides use
    // identical kernel paths and a perfect prediction yields exactly zero.
    auto f_gt = fx->forward(i_gt.detach());
    if (f_re.size() != FeatureExtractorImpl::kTaps) {
        throw ValidationError("extractor produced " + std::to_string(f_re.size()) +
                              " taps, expected " + std::to_string(FeatureExtractorImpl::kTaps));
    }
    auto acc = torch::zeros({}, i_re.options().dtype(torch::kFloat64));
    for (std::size_t i = 0; i < f_re.size(); ++i) {
        acc = acc + (f_re[i] - f_gt[i].detach()).pow(2).mean();
    }
    return acc / static_cast<double>(f_re.size());
}

LossBreakdown total_loss(const torch::Tensor& i_re, const torch::Tensor& i_gt,
                         FeatureExtractor& fx, double w_rec, double w_per) {
    LossBreakdown b;
    b.w_rec = w_rec;
    b.w_per = w_per;
    b.rec = reconstruction_loss(i_re, i_gt);
    b.per = w_per != 0.0 ? perceptual_loss(i_re, i_gt, fx)
                         : torch::zeros({}, b.rec.options());
    b.total = w_rec * b.rec + w_per * b.per;
    return b;
}

} // namespace mkoie::loss
