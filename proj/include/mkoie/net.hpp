// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0
//
// Network blocks: residual learning block (RLB), multi-receptive-field
// enhancement (MRFE), task-specific module (TSM), sub-node encoder/decoder,
// self-attention, task-oriented node learning (TNL), and the full enhancer.

#pragma once

#include <torch/torch.h>

#include "mkoie/common.hpp"
#include "mkoie/config.hpp"

namespace mkoie::net {

// Layer normalization over (C,H,W) per sample with per-channel affine.
torch::Tensor layer_norm_chw(const torch::Tensor& x, const torch::Tensor& weight,
                             const torch::Tensor& bias, double eps = 1e-5);

// Group normalization with per-position statistics: each spatial location is
// normalized over the channels of its group independently, so the operator
// is purely local (a pixel perturbation cannot leak through the statistics).
torch::Tensor group_norm_local(const torch::Tensor& x, int groups,
                               const torch::Tensor& weight, const torch::Tensor& bias,
                               double eps = 1e-5);

// y = x + PReLU(LN(conv3x3(x)))
struct RLBImpl : torch::nn::Module {
    explicit RLBImpl(int channels);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::Conv2d conv{nullptr};
    torch::nn::PReLU act{nullptr};
    torch::Tensor ln_weight, ln_bias;
    int channels;
};
TORCH_MODULE(RLB);

// y = x + PReLU(GN(pointwise(concat[D1(x), D3(x), D5(x)]))) where Dk is a
// depthwise separable 3x3 convolution with dilation k. Branch receptive
// fields are 3x3, 7x7 and 11x11.
struct MRFEImpl : torch::nn::Module {
    MRFEImpl(int channels, std::array<int, 3> dilations = {1, 3, 5}, int gn_groups = 4);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::Conv2d dw1{nullptr}, pw1{nullptr};
    torch::nn::Conv2d dw3{nullptr}, pw3{nullptr};
    torch::nn::Conv2d dw5{nullptr}, pw5{nullptr};
    torch::nn::Conv2d fuse{nullptr};
    torch::Tensor gn_weight, gn_bias;
    torch::nn::PReLU act{nullptr};
    int channels;
    int gn_groups;
};
TORCH_MODULE(MRFE);

// One independent RLB per task; only the selected branch participates in the
// graph, so unselected branches receive no gradient.
struct TSMImpl : torch::nn::Module {
    explicit TSMImpl(int channels);
    torch::Tensor forward(const torch::Tensor& f_e, Task task);

    RLB branch_id{nullptr}, branch_llie{nullptr}, branch_nhie{nullptr};
};
TORCH_MODULE(TSM);

// F_E = M2(M1(x) down2); F_D = M4(M3(F_E) up2). Down is 2x2 average pooling,
// up is bilinear; spatial dims must be even.
struct SubNodeImpl : torch::nn::Module {
    SubNodeImpl(int channels, std::array<int, 3> dilations);
    torch::Tensor forward(const torch::Tensor& x);

    MRFE m1{nullptr}, m2{nullptr}, m3{nullptr}, m4{nullptr};
};
TORCH_MODULE(SubNode);

// gamma * softmax(Q K^T / sqrt(dk)) V + F_D with Q,V from F_D and K from the
// task-specific reference feature.
struct SelfAttentionImpl : torch::nn::Module {
    SelfAttentionImpl(int channels, int dk);
    torch::Tensor forward(const torch::Tensor& f_d, const torch::Tensor& f_ts);
    // Row-stochastic attention weights (B, HW, HW); exposed for testing.
    torch::Tensor attention_weights(const torch::Tensor& f_d, const torch::Tensor& f_ts);

    torch::nn::Conv2d proj_q{nullptr}, proj_k{nullptr}, proj_v{nullptr};
    torch::Tensor gamma;
    int dk;
};
TORCH_MODULE(SelfAttention);

// Task routing. Tasks 1 and 2 run TSM then their own sub-node. Task 3 runs
// both auxiliary sub-nodes, refines each with attention against the TSM
// output, fuses them with a sigmoid-bounded weight, then runs the night-haze
// sub-node.
struct TNLImpl : torch::nn::Module {
    explicit TNLImpl(const ModelConfig& cfg);
    torch::Tensor forward(const torch::Tensor& f_e, Task task);
    double fusion_alpha() const; // sigmoid(fusion logit)

    TSM tsm{nullptr};
    SubNode node_id{nullptr}, node_llie{nullptr}, node_nhie{nullptr};
    SelfAttention sa_id{nullptr}, sa_llie{nullptr};
    torch::Tensor fusion_logit;
};
TORCH_MODULE(TNL);

// Full model: encoder (stem + staged RLBs with strided-conv downsampling and
// channel doubling), TNL bottleneck, mirrored decoder with additive skips,
// 3-channel head and sigmoid output.
struct EnhancerImpl : torch::nn::Module {
    explicit EnhancerImpl(const ModelConfig& cfg);
    torch::Tensor forward(const torch::Tensor& image, Task task);

    ModelConfig config;
    torch::nn::Conv2d stem{nullptr};
    std::vector<torch::nn::Sequential> enc_blocks; // per stage
    std::vector<torch::nn::Conv2d> downs;
    TNL tnl{nullptr};
    std::vector<torch::nn::Conv2d> ups; // 1x1 channel-halving convs
    std::vector<torch::nn::Sequential> dec_blocks;
    torch::nn::Conv2d head{nullptr};
};
TORCH_MODULE(Enhancer);

// Kaiming fan-in init for conv weights, zero biases, PReLU slope 0.25,
// attention gain and fusion logit start at 0. Seeded and deterministic.
void init_parameters(torch::nn::Module& m, std::uint64_t seed);

// Builds, initializes and casts the model per config.
Enhancer build_enhancer(const ModelConfig& cfg, std::uint64_t seed);

} // namespace mkoie::net
