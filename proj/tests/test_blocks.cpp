// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0


#include "fd.hpp"
#include "mkoie/net.hpp"
#include "oracles.hpp"

// doctest must come after the torch headers so its CHECK macros win
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

using namespace mkoie;
using namespace mkoie::net;

namespace {

void zero_all(torch::nn::Module& m) {
    torch::NoGradGuard g;
    for (auto& p : m.parameters()) p.zero_();
}

void randomize(torch::nn::Module& m, double scale, std::uint64_t seed) {
    torch::manual_seed(seed);
    torch::NoGradGuard g;
    for (auto& p : m.parameters()) p.copy_(torch::randn_like(p) * scale);
}

} // namespace

TEST_CASE("RLB zero-branch identity and shape") {
    RLB rlb(32);
    rlb->to(torch::kFloat64);
    zero_all(*rlb);
    {
        torch::NoGradGuard g;
        rlb->ln_weight.fill_(1.0);
    }
    torch::manual_seed(0);
    auto x = torch::rand({1, 32, 16, 16}, torch::kFloat64);
    auto y = rlb(x);
    CHECK(y.sizes() == x.sizes());
    CHECK((y - x).abs().max().item<double>() == 0.0);
}

TEST_CASE("RLB rejects channel mismatch") {
    RLB rlb(16);
    rlb->to(torch::kFloat64);
    CHECK_THROWS_AS(rlb(torch::rand({1, 8, 8, 8}, torch::kFloat64)), ValidationError);
}

TEST_CASE("RLB matches scalar-loop oracle") {
    RLB rlb(6);
    rlb->to(torch::kFloat64);
    randomize(*rlb, 0.2, 21);
    torch::manual_seed(22);
    auto x = torch::rand({2, 6, 9, 9}, torch::kFloat64);
    auto y = rlb(x);

    auto conv = oracle::conv2d_ref(x, rlb->conv->weight, rlb->conv->bias, 1, 1);
    auto ln = oracle::layer_norm_ref(conv, rlb->ln_weight, rlb->ln_bias);
    auto expect = x + oracle::prelu_ref(ln, rlb->act->weight);
    CHECK((y - expect).abs().max().item<double>() < 1e-5);
}

TEST_CASE("MRFE zero-branch identity") {
    MRFE mrfe(16);
    mrfe->to(torch::kFloat64);
    zero_all(*mrfe);
    {
        torch::NoGradGuard g;
        mrfe->gn_weight.fill_(1.0);
    }
    torch::manual_seed(1);
    auto x = torch::rand({1, 16, 10, 10}, torch::kFloat64);
    CHECK((mrfe(x) - x).abs().max().item<double>() == 0.0);
}

TEST_CASE("MRFE impulse support confined to 11x11") {
    MRFE mrfe(8);
    mrfe->to(torch::kFloat64);
    randomize(*mrfe, 0.3, 31);
    auto base = torch::zeros({1, 8, 24, 24}, torch::kFloat64);
    auto bumped = base.clone();
    bumped[0][3][12][12] = 1.0;
    auto delta = (mrfe(bumped) - mrfe(base)).abs().sum({0, 1});
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x) {
            if (std::abs(y - 12) <= 5 && std::abs(x - 12) <= 5) continue;
            CHECK(delta[y][x].item<double>() == 0.0);
        }
}

TEST_CASE("MRFE matches scalar-loop oracle") {
    MRFE mrfe(16);
    mrfe->to(torch::kFloat64);
    randomize(*mrfe, 0.15, 41);
    torch::manual_seed(42);
    auto x = torch::rand({1, 16, 12, 12}, torch::kFloat64);
    auto y = mrfe(x);

    auto branch = [&](torch::nn::Conv2d& dw, torch::nn::Conv2d& pw, int d) {
        auto t = oracle::conv2d_ref(x, dw->weight, dw->bias, 1, d, d, 16);
        return oracle::conv2d_ref(t, pw->weight, pw->bias);
    };
    auto cat = torch::cat({branch(mrfe->dw1, mrfe->pw1, 1), branch(mrfe->dw3, mrfe->pw3, 3),
                           branch(mrfe->dw5, mrfe->pw5, 5)},
                          1);
    auto fused = oracle::conv2d_ref(cat, mrfe->fuse->weight, mrfe->fuse->bias);
    auto gn = oracle::group_norm_ref(fused, 4, mrfe->gn_weight, mrfe->gn_bias);
    auto expect = x + oracle::prelu_ref(gn, mrfe->act->weight);
    CHECK((y - expect).abs().max().item<double>() < 1e-5);
}

TEST_CASE("TSM branch selection and isolation") {
    TSM tsm(8);
    tsm->to(torch::kFloat64);
    randomize(*tsm, 0.2, 51);
    torch::manual_seed(52);
    auto f_e = torch::rand({1, 8, 8, 8}, torch::kFloat64);

    auto y1 = tsm(f_e, Task::Dehaze);
    auto y2 = tsm(f_e, Task::LowLight);
    CHECK((y1 - y2).abs().max().item<double>() > 1e-6);

    zero_all(*tsm->branch_id);
    {
        torch::NoGradGuard g;
        tsm->branch_id->ln_weight.fill_(1.0);
    }
    CHECK((tsm(f_e, Task::Dehaze) - f_e).abs().max().item<double>() == 0.0);

    // gradient of a task-1 scalar w.r.t. task-2 weights is identically absent
    auto scalar = tsm(f_e, Task::Dehaze).sum();
    scalar.backward();
    for (auto& p : tsm->branch_llie->parameters()) {
        CHECK(!p.grad().defined());
    }
}

TEST_CASE("sub-node shape restore and odd-dim rejection") {
    SubNode node(8, std::array<int, 3>{1, 3, 5});
    node->to(torch::kFloat64);
    randomize(*node, 0.1, 61);
    torch::manual_seed(62);
    auto x = torch::rand({1, 8, 16, 16}, torch::kFloat64);
    CHECK(node(x).sizes() == x.sizes());
    CHECK_THROWS_AS(node(torch::rand({1, 8, 15, 15}, torch::kFloat64)), ValidationError);
}

TEST_CASE("sub-node with zeroed blocks is pure resampling") {
    SubNode node(8, std::array<int, 3>{1, 3, 5});
    node->to(torch::kFloat64);
    zero_all(*node);
    {
        torch::NoGradGuard g;
        for (auto m : {node->m1, node->m2, node->m3, node->m4}) m->gn_weight.fill_(1.0);
    }
    torch::manual_seed(63);
    auto x = torch::rand({1, 8, 12, 12}, torch::kFloat64);
    namespace F = torch::nn::functional;
    auto down = F::avg_pool2d(x, F::AvgPool2dFuncOptions(2));
    auto expect = F::interpolate(down, F::InterpolateFuncOptions()
                                           .scale_factor(std::vector<double>{2.0, 2.0})
                                           .mode(torch::kBilinear)
                                           .align_corners(false));
    CHECK((node(x) - expect).abs().max().item<double>() < 1e-12);
}

TEST_CASE("self-attention gamma zero is identity") {
    SelfAttention sa(8, 8);
    sa->to(torch::kFloat64);
    randomize(*sa, 0.3, 71);
    {
        torch::NoGradGuard g;
        sa->gamma.zero_();
    }
    torch::manual_seed(72);
    auto f_d = torch::rand({1, 8, 6, 6}, torch::kFloat64);
    auto f_ts = torch::rand({1, 8, 6, 6}, torch::kFloat64);
    CHECK((sa(f_d, f_ts) - f_d).abs().max().item<double>() == 0.0);
}

TEST_CASE("self-attention rows sum to one") {
    SelfAttention sa(8, 4);
    sa->to(torch::kFloat64);
    randomize(*sa, 0.5, 81);
    torch::manual_seed(82);
    auto f_d = torch::rand({2, 8, 4, 4}, torch::kFloat64);
    auto f_ts = torch::rand({2, 8, 4, 4}, torch::kFloat64);
    auto w = sa->attention_weights(f_d, f_ts);
    CHECK((w.sum(2) - 1.0).abs().max().item<double>() < 1e-6);
    CHECK_THROWS_AS(sa(f_d, torch::rand({2, 8, 5, 5}, torch::kFloat64)), ValidationError);
}

TEST_CASE("self-attention matches dense oracle") {
    SelfAttention sa(8, 8);
    sa->to(torch::kFloat64);
    randomize(*sa, 0.4, 91);
    {
        torch::NoGradGuard g;
        sa->gamma.fill_(0.7);
    }
    torch::manual_seed(92);
    auto f_d = torch::rand({1, 8, 4, 4}, torch::kFloat64);
    auto f_ts = torch::rand({1, 8, 4, 4}, torch::kFloat64);
    auto y = sa(f_d, f_ts);
    auto expect = oracle::attention_ref(f_d, f_ts, sa->proj_q->weight, sa->proj_q->bias,
                                        sa->proj_k->weight, sa->proj_k->bias,
                                        sa->proj_v->weight, sa->proj_v->bias, 0.7, 8);
    CHECK((y - expect).abs().max().item<double>() < 1e-5);
}

TEST_CASE("block gradients agree with finite differences") {
    torch::manual_seed(100);
    auto proj = torch::randn({1, 8, 8, 8}, torch::kFloat64);

    RLB rlb(8);
    rlb->to(torch::kFloat64);
    randomize(*rlb, 0.2, 101);
    auto x1 = torch::randn({1, 8, 8, 8}, torch::kFloat64).set_requires_grad(true);
    std::vector<torch::Tensor> leaves1{x1};
    for (auto& p : rlb->parameters()) leaves1.push_back(p);
    auto err1 = oracle::max_grad_rel_err([&] { return (rlb(x1) * proj).sum(); }, leaves1, 4,
                                         1e-5, 1);
    CHECK(err1 < 1e-2);

    MRFE mrfe(8);
    mrfe->to(torch::kFloat64);
    randomize(*mrfe, 0.2, 102);
    auto x2 = torch::randn({1, 8, 8, 8}, torch::kFloat64).set_requires_grad(true);
    std::vector<torch::Tensor> leaves2{x2};
    for (auto& p : mrfe->parameters()) leaves2.push_back(p);
    auto err2 = oracle::max_grad_rel_err([&] { return (mrfe(x2) * proj).sum(); }, leaves2, 4,
                                         1e-5, 2);
    CHECK(err2 < 1e-2);

    SelfAttention sa(8, 4);
    sa->to(torch::kFloat64);
    randomize(*sa, 0.3, 103);
    auto xd = torch::randn({1, 8, 4, 4}, torch::kFloat64).set_requires_grad(true);
    auto xt = torch::randn({1, 8, 4, 4}, torch::kFloat64).set_requires_grad(true);
    auto proj_s = torch::randn({1, 8, 4, 4}, torch::kFloat64);
    std::vector<torch::Tensor> leaves3{xd, xt};
    for (auto& p : sa->parameters()) leaves3.push_back(p);
    auto err3 = oracle::max_grad_rel_err([&] { return (sa(xd, xt) * proj_s).sum(); }, leaves3,
                                         4, 1e-5, 3);
    CHECK(err3 < 1e-2);
}
