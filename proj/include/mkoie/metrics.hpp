// Copyright (c) 2026 MKoIE Contributors
// SPDX-License-Identifier: Apache-2.0
//
// Full-reference quality metrics and per-task mean/std reports.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "mkoie/common.hpp"
#include "mkoie/dataset.hpp"
#include "mkoie/net.hpp"

namespace mkoie::metrics {

// 10*log10(peak^2 / MSE) over all channels; +inf when images are identical.
double psnr(const torch::Tensor& a, const torch::Tensor& b, double peak = 1.0);

// Mean local SSIM, 11x11 Gaussian window sigma 1.5, C1=(0.01*peak)^2,
// C2=(0.03*peak)^2, valid windows, per channel then averaged.
double ssim(const torch::Tensor& a, const torch::Tensor& b, double peak = 1.0);

struct TaskRow {
    Task task;
    int n = 0;             // samples evaluated
    int psnr_excluded = 0; // infinite-PSNR samples left out of mean/std
    double psnr_mean = 0, psnr_std = 0;
    double ssim_mean = 0, ssim_std = 0;
};

struct MetricReport {
    std::vector<TaskRow> rows;

    std::string to_csv() const;   // fixed header row
    std::string to_table() const; // human-readable
};

// Runs the model on every sample of the requested tasks and aggregates
// PSNR/SSIM with population std. Order-independent: samples are aggregated
// in (task, id) order regardless of dataset order.
MetricReport evaluate(net::Enhancer& model, const data::PairedDataset& data,
                      const std::vector<Task>& tasks);

} // namespace mkoie::metrics
