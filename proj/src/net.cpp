// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0

#include "mkoie/net.hpp"

#include <cmath>

namespace F = torch::nn::functional;

namespace mkoie::net {

torch::Tensor layer_norm_chw(const torch::Tensor& x, const torch::Tensor& weight,
                             const torch::Tensor& bias, double eps) {
    auto mean = x.mean({1, 2, 3}, /*keepdim=*/true);
    auto var = (x - mean).pow(2).mean({1, 2, 3}, /*keepdim=*/true);
    auto norm = (x - mean) / torch::sqrt(var + eps);
    const auto c = x.size(1);
    return norm * weight.view({1, c, 1, 1}) + bias.view({1, c, 1, 1});
}

RLBImpl::RLBImpl(int ch) : channels(ch) {
    conv = register_module("conv", torch::nn::Conv2d(
        torch::nn::Conv2dOptions(ch, ch, 3).padding(1)));
    act = register_module("act", torch::nn::PReLU(
        torch::nn::PReLUOptions().num_parameters(ch).init(0.25)));
    ln_weight = register_parameter("ln_weight", torch::ones({ch}));
    ln_bias = register_parameter("ln_bias", torch::zeros({ch}));
}

torch::Tensor RLBImpl::forward(const torch::Tensor& x) {
    if (x.dim() != 4 || x.size(1) != channels) {
        throw ValidationError("RLB: expected NCHW input with " + std::to_string(channels) +
                              " channels");
    }
    return x + act(layer_norm_chw(conv(x), ln_weight, ln_bias));
}

torch::Tensor group_norm_local(const torch::Tensor& x, int groups,
                               const torch::Tensor& weight, const torch::Tensor& bias,
                               double eps) {
    const auto n = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
    auto g = x.view({n, groups, c / groups, h, w});
    auto mean = g.mean({2}, /*keepdim=*/true);
    auto var = (g - mean).pow(2).mean({2}, /*keepdim=*/true);
    auto norm = ((g - mean) / torch::sqrt(var + eps)).view({n, c, h, w});
    return norm * weight.view({1, c, 1, 1}) + bias.view({1, c, 1, 1});
}

MRFEImpl::MRFEImpl(int ch, std::array<int, 3> dilations, int groups)
    : channels(ch), gn_groups(groups) {
    auto dw = [ch](int d) {
        return torch::nn::Conv2d(
            torch::nn::Conv2dOptions(ch, ch, 3).padding(d).dilation(d).groups(ch));
    };
    auto pw = [ch]() {
        return torch::nn::Conv2d(torch::nn::Conv2dOptions(ch, ch, 1));
    };
    dw1 = register_module("dw1", dw(dilations[0]));
    pw1 = register_module("pw1", pw());
    dw3 = register_module("dw3", dw(dilations[1]));
    pw3 = register_module("pw3", pw());
    dw5 = register_module("dw5", dw(dilations[2]));
    pw5 = register_module("pw5", pw());
    fuse = register_module("fuse", torch::nn::Conv2d(torch::nn::Conv2dOptions(3 * ch, ch, 1)));
    gn_weight = register_parameter("gn_weight", torch::ones({ch}));
    gn_bias = register_parameter("gn_bias", torch::zeros({ch}));
    act = register_module("act", torch::nn::PReLU(
        torch::nn::PReLUOptions().num_parameters(ch).init(0.25)));
}

torch::Tensor MRFEImpl::forward(const torch::Tensor& x) {
    if (x.dim() != 4 || x.size(1) != channels) {
        throw ValidationError("MRFE: expected NCHW input with " + std::to_string(channels) +
                              " channels");
    }
    auto b1 = pw1(dw1(x));
    auto b3 = pw3(dw3(x));
    auto b5 = pw5(dw5(x));
    return x + act(group_norm_local(fuse(torch::cat({b1, b3, b5}, 1)), gn_groups,
                                    gn_weight, gn_bias));
}

TSMImpl::TSMImpl(int ch) {
    branch_id = register_module("branch_id", RLB(ch));
    branch_llie = register_module("branch_llie", RLB(ch));
    branch_nhie = register_module("branch_nhie", RLB(ch));
}

torch::Tensor TSMImpl::forward(const torch::Tensor& f_e, Task task) {
    switch (task) {
    case Task::Dehaze: return branch_id(f_e);
    case Task::LowLight: return branch_llie(f_e);
    case Task::NightHaze: return branch_nhie(f_e);
    }
    throw ValidationError("TSM: unknown task");
}

SubNodeImpl::SubNodeImpl(int ch, std::array<int, 3> dil) {
    m1 = register_module("m1", MRFE(ch, dil));
    m2 = register_module("m2", MRFE(ch, dil));
    m3 = register_module("m3", MRFE(ch, dil));
    m4 = register_module("m4", MRFE(ch, dil));
}

torch::Tensor SubNodeImpl::forward(const torch::Tensor& x) {
    if (x.size(2) % 2 != 0 || x.size(3) % 2 != 0) {
        throw ValidationError("sub-node input spatial dims must be even, got " +
                              std::to_string(x.size(2)) + "x" + std::to_string(x.size(3)));
    }
    auto f_e = m2(F::avg_pool2d(m1(x), F::AvgPool2dFuncOptions(2)));
    auto up = F::interpolate(m3(f_e), F::InterpolateFuncOptions()
                                           .scale_factor(std::vector<double>{2.0, 2.0})
                                           .mode(torch::kBilinear)
                                           .align_corners(false));
    return m4(up);
}

SelfAttentionImpl::SelfAttentionImpl(int ch, int dk_) : dk(dk_) {
    if (dk < 1) throw ValidationError("attention dk must be >= 1");
    proj_q = register_module("proj_q", torch::nn::Conv2d(torch::nn::Conv2dOptions(ch, dk, 1)));
    proj_k = register_module("proj_k", torch::nn::Conv2d(torch::nn::Conv2dOptions(ch, dk, 1)));
    proj_v = register_module("proj_v", torch::nn::Conv2d(torch::nn::Conv2dOptions(ch, ch, 1)));
    gamma = register_parameter("gamma", torch::zeros({1}));
}

torch::Tensor SelfAttentionImpl::attention_weights(const torch::Tensor& f_d,
                                                   const torch::Tensor& f_ts) {
    if (!f_d.sizes().equals(f_ts.sizes())) {
        throw ValidationError("attention inputs must share shape");
    }
    const auto b = f_d.size(0), hw = f_d.size(2) * f_d.size(3);
    auto q = proj_q(f_d).view({b, dk, hw}).transpose(1, 2); // B,HW,dk
    auto k = proj_k(f_ts).view({b, dk, hw});                // B,dk,HW
    auto scores = torch::bmm(q, k) / std::sqrt(static_cast<double>(dk));
    return torch::softmax(scores, /*dim=*/2); // rows sum to 1
}

torch::Tensor SelfAttentionImpl::forward(const torch::Tensor& f_d, const torch::Tensor& f_ts) {
    const auto b = f_d.size(0), c = f_d.size(1), h = f_d.size(2), w = f_d.size(3);
    auto weights = attention_weights(f_d, f_ts);            // B,HW,HW
    auto v = proj_v(f_d).view({b, c, h * w}).transpose(1, 2); // B,HW,C
    auto out = torch::bmm(weights, v).transpose(1, 2).reshape({b, c, h, w});
    return gamma * out + f_d;
}

TNLImpl::TNLImpl(const ModelConfig& cfg) {
    const int ch = cfg.tnl_channels();
    tsm = register_module("tsm", TSM(ch));
    node_id = register_module("node_id", SubNode(ch, cfg.dilations));
    node_llie = register_module("node_llie", SubNode(ch, cfg.dilations));
    node_nhie = register_module("node_nhie", SubNode(ch, cfg.dilations));
    sa_id = register_module("sa_id", SelfAttention(ch, cfg.resolved_attn_dk()));
    sa_llie = register_module("sa_llie", SelfAttention(ch, cfg.resolved_attn_dk()));
    fusion_logit = register_parameter("fusion_logit", torch::zeros({1}));
}

double TNLImpl::fusion_alpha() const {
    return torch::sigmoid(fusion_logit).item<double>();
}

torch::Tensor TNLImpl::forward(const torch::Tensor& f_e, Task task) {
    auto f_ts = tsm(f_e, task);
    switch (task) {
    case Task::Dehaze:
        return node_id(f_ts);
    case Task::LowLight:
        return node_llie(f_ts);
    case Task::NightHaze: {
        auto a_llie = sa_llie(node_llie(f_ts), f_ts);
        auto a_id = sa_id(node_id(f_ts), f_ts);
        auto alpha = torch::sigmoid(fusion_logit);
        auto x_in = alpha * a_llie + (1.0 - alpha) * a_id;
        return node_nhie(x_in);
    }
    }
    throw ValidationError("TNL: unknown task");
}

EnhancerImpl::EnhancerImpl(const ModelConfig& cfg) : config(cfg) {
    cfg.validate();
    int ch = cfg.base_channels;
    stem = register_module("stem", torch::nn::Conv2d(torch::nn::Conv2dOptions(3, ch, 3).padding(1)));
    for (int s = 0; s < cfg.encoder_stages; ++s) {
        torch::nn::Sequential blocks;
        for (int i = 0; i < cfg.rlb_per_stage; ++i) blocks->push_back(RLB(ch));
        enc_blocks.push_back(register_module("enc" + std::to_string(s), blocks));
        downs.push_back(register_module(
            "down" + std::to_string(s),
            torch::nn::Conv2d(torch::nn::Conv2dOptions(ch, 2 * ch, 3).stride(2).padding(1))));
        ch *= 2;
    }
    tnl = register_module("tnl", TNL(cfg));
    for (int s = cfg.encoder_stages - 1; s >= 0; --s) {
        ups.push_back(register_module(
            "up" + std::to_string(s),
            torch::nn::Conv2d(torch::nn::Conv2dOptions(ch, ch / 2, 1))));
        ch /= 2;
        torch::nn::Sequential blocks;
        for (int i = 0; i < cfg.rlb_per_stage; ++i) blocks->push_back(RLB(ch));
        dec_blocks.push_back(register_module("dec" + std::to_string(s), blocks));
    }
    head = register_module("head", torch::nn::Conv2d(torch::nn::Conv2dOptions(ch, 3, 3).padding(1)));
}

torch::Tensor EnhancerImpl::forward(const torch::Tensor& image, Task task) {
    if (image.dim() != 4 || image.size(1) != 3) {
        throw ValidationError("enhancer expects Nx3xHxW input");
    }
    const int div = config.divisibility();
    if (image.size(2) % div != 0 || image.size(3) % div != 0) {
        throw ValidationError("input spatial dims must be divisible by " + std::to_string(div) +
                              ", got " + std::to_string(image.size(2)) + "x" +
                              std::to_string(image.size(3)));
    }
    auto x = stem(image);
    std::vector<torch::Tensor> skips;
    for (int s = 0; s < config.encoder_stages; ++s) {
        x = enc_blocks[s]->forward(x);
        skips.push_back(x);
        x = downs[s](x);
    }
    x = tnl(x, task);
    for (int s = 0; s < config.encoder_stages; ++s) {
        x = F::interpolate(x, F::InterpolateFuncOptions()
                                  .scale_factor(std::vector<double>{2.0, 2.0})
                                  .mode(torch::kBilinear)
                                  .align_corners(false));
        x = ups[s](x);
        x = x + skips[config.encoder_stages - 1 - s];
        x = dec_blocks[s]->forward(x);
    }
    return torch::sigmoid(head(x));
}

void init_parameters(torch::nn::Module& m, std::uint64_t seed) {
    torch::manual_seed(seed);
    torch::NoGradGuard no_grad;
    for (auto& p : m.named_parameters()) {
        const auto& name = p.key();
        auto& t = p.value();
        if (name.ends_with("gamma") || name.ends_with("fusion_logit")) {
            t.zero_();
        } else if (name.ends_with(".weight") && t.dim() == 4) {
            torch::nn::init::kaiming_normal_(t, /*a=*/0.25, torch::kFanIn,
                                             torch::kLeakyReLU);
        } else if (name.ends_with(".bias") || name.ends_with("ln_bias") ||
                   name.ends_with("gn_bias")) {
            t.zero_();
        } else if (name.ends_with("ln_weight") || name.ends_with("gn_weight")) {
            t.fill_(1.0);
        } else if (name.find("act.weight") != std::string::npos) {
            t.fill_(0.25);
        }
    }
}

Enhancer build_enhancer(const ModelConfig& cfg, std::uint64_t seed) {
    Enhancer model(cfg);
    model->to(torch::kFloat64);
    init_parameters(*model, seed);
    if (cfg.use_float32) model->to(torch::kFloat32);
    return model;
}

} // namespace mkoie::net
