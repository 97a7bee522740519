// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference gradient checking against autograd.

#pragma once

#include <functional>
#include <random>
#include <vector>

#include <torch/torch.h>

#include "oracles.hpp"

namespace oracle {

// scalar_fn re-evaluates the scalar objective from the current leaf values.
// Checks `samples_per_leaf` random entries of each leaf. Returns the worst
// relative error between analytic and central-difference gradients.
inline double max_grad_rel_err(const std::function<torch::Tensor()>& scalar_fn,
                               const std::vector<torch::Tensor>& leaves,
                               int samples_per_leaf, double step, std::uint64_t seed,
                               int* checked = nullptr) {
    for (const auto& leaf : leaves) {
        if (leaf.grad().defined()) leaf.mutable_grad().zero_();
    }
    auto scalar = scalar_fn();
    scalar.backward();

    std::mt19937_64 gen(seed);
    double worst = 0;
    int count = 0;
    for (const auto& leaf : leaves) {
        auto grad = leaf.grad().defined() ? leaf.grad().reshape(-1)
                                          : torch::zeros({leaf.numel()}, torch::kFloat64);
        auto flat = leaf.view(-1); // aliases leaf storage; writes must stick
        const auto n = flat.numel();
        for (int s = 0; s < samples_per_leaf; ++s) {
            const auto idx = static_cast<std::int64_t>(gen() % n);
            const double orig = flat[idx].item<double>();
            double plus, minus;
            {
                torch::NoGradGuard no_grad;
                flat[idx] = orig + step;
                plus = scalar_fn().item<double>();
                flat[idx] = orig - step;
                minus = scalar_fn().item<double>();
                flat[idx] = orig;
            }
            const double fd = (plus - minus) / (2 * step);
            worst = std::max(worst, rel_err(grad[idx].item<double>(), fd));
            ++count;
        }
    }
    if (checked) *checked = count;
    return worst;
}

} // namespace oracle
